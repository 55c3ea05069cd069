"""Adaptive Simpson quadrature, cumulative antiderivatives and I_{g,h}.

``I_{g,h}(xi, t) = int_xi^t exp(-int_tau^t g(s) ds) h(tau) dtau``.  The inner
integral is never recomputed per tau: ``G(t) = int_xi^t g`` is built once on
an adaptive mesh and read back through cubic Hermite interpolation, so
``I = int exp(G(tau) - G(t)) h(tau) dtau`` costs a single outer pass.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..coeffexpr.expr import Expr
from ..errors import PreconditionError, QuadratureError

ABS_TOL = 1e-10
REL_TOL = 1e-10
MAX_DEPTH = 40
# initial panels; a single Simpson panel can mistake sin over a period for 0
_INITIAL_PANELS = 8


def as_function(g) -> Callable[[float], float]:
    """Accept an Expr, a number or a callable of one real argument."""
    if isinstance(g, Expr):
        return lambda t: float(g.evaluate(t))
    if isinstance(g, (int, float)):
        v = float(g)
        return lambda t: v
    return g


def _tolerances(policy, abs_tol, rel_tol, max_depth):
    if policy is not None:
        abs_tol = getattr(policy, "quad_atol", abs_tol)
        rel_tol = getattr(policy, "quad_rtol", rel_tol)
        max_depth = getattr(policy, "quad_max_depth", max_depth)
    return abs_tol, rel_tol, max_depth


def _adaptive(f, a, b, abs_tol, rel_tol, max_depth, hermite):
    """Left-to-right adaptive Simpson; returns mesh nodes, cumulative values, f at nodes."""
    width = b - a
    edges = np.linspace(a, b, _INITIAL_PANELS + 1)
    stack = []
    for l, r in reversed(list(zip(edges[:-1], edges[1:]))):
        m = 0.5 * (l + r)
        fl, fm, fr = f(l), f(m), f(r)
        stack.append((l, r, fl, fm, fr, (r - l) * (fl + 4 * fm + fr) / 6.0, 0))
    nodes, values, derivs = [a], [0.0], [stack[-1][2]]
    acc = 0.0
    while stack:
        l, r, fl, fm, fr, whole, depth = stack.pop()
        m = 0.5 * (l + r)
        h = r - l
        lm, rm = 0.5 * (l + m), 0.5 * (m + r)
        flm, frm = f(lm), f(rm)
        left = h * (fl + 4 * flm + fm) / 12.0
        right = h * (fm + 4 * frm + fr) / 12.0
        err = left + right - whole
        tol = max(abs_tol * h / width, rel_tol * abs(left + right))
        ok = abs(err) <= 15.0 * tol
        if ok and hermite:
            # cubic Hermite of the antiderivative on [l, r], read at m
            predicted = 0.5 * (left + right) + h * (fl - fr) / 8.0
            ok = abs(predicted - left) <= tol
        if ok or not math.isfinite(err):
            if not math.isfinite(err):
                raise QuadratureError(f"non-finite integrand near t={m!r}")
            acc += left + right + err / 15.0
            nodes.append(r)
            values.append(acc)
            derivs.append(fr)
            continue
        if depth >= max_depth:
            raise QuadratureError(
                f"tolerance not met within {max_depth} subdivisions near t={m!r} (error {abs(err):.3g})")
        stack.append((m, r, fm, frm, fr, right, depth + 1))
        stack.append((l, m, fl, flm, fm, left, depth + 1))
    return np.array(nodes), np.array(values), np.array(derivs)


def adaptive_simpson(f, a: float, b: float, abs_tol: float = ABS_TOL, rel_tol: float = REL_TOL,
                     max_depth: int = MAX_DEPTH) -> float:
    """``int_a^b f``; raises QuadratureError when the tolerance cannot be met."""
    if b == a:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, abs_tol, rel_tol, max_depth)
    _, values, _ = _adaptive(as_function(f), a, b, abs_tol, rel_tol, max_depth, hermite=False)
    return float(values[-1])


class CumulativeIntegral:
    """``G(t) = int_a^t g`` for t in [a, b], as a piecewise cubic Hermite.

    The mesh is refined until both the Simpson estimate and the Hermite
    midpoint prediction are within tolerance on every panel.  Immutable after
    construction.
    """

    def __init__(self, g, a: float, b: float, abs_tol: float = ABS_TOL, rel_tol: float = REL_TOL,
                 max_depth: int = MAX_DEPTH):
        if not b > a:
            raise PreconditionError("cumulative integral needs b > a")
        self.a, self.b = float(a), float(b)
        self.nodes, self.values, self.derivs = _adaptive(
            as_function(g), self.a, self.b, abs_tol, rel_tol, max_depth, hermite=True)
        self.nodes.setflags(write=False)
        self.values.setflags(write=False)
        self.derivs.setflags(write=False)

    @property
    def total(self) -> float:
        return float(self.values[-1])

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < self.a - 1e-12 * max(1.0, abs(self.a))) or np.any(t > self.b + 1e-12 * max(1.0, abs(self.b))):
            raise PreconditionError("cumulative integral evaluated outside its interval")
        x = self.nodes
        i = np.clip(np.searchsorted(x, t, side="right") - 1, 0, len(x) - 2)
        h = x[i + 1] - x[i]
        s = (t - x[i]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        out = (h00 * self.values[i] + h10 * h * self.derivs[i]
               + h01 * self.values[i + 1] + h11 * h * self.derivs[i + 1])
        return float(out[0]) if scalar else out


def quad_Igh(g, h, xi: float, t: float, policy=None, *, abs_tol: float = ABS_TOL,
             rel_tol: float = REL_TOL, max_depth: int = MAX_DEPTH) -> float:
    """``I_{g,h}(xi, t)`` by nested adaptive quadrature (requires t >= xi).

    Tolerances come from ``policy`` (attributes ``quad_atol``, ``quad_rtol``,
    ``quad_max_depth``) when one is given.  The acceptance test is mixed:
    a panel passes if its error is below the absolute share *or* the relative
    bound, since exponentially large weights make a pure 1e-10 absolute
    target unreachable in double precision.
    """
    if t < xi:
        raise PreconditionError("I_{g,h}(xi, t) requires t >= xi")
    if t == xi:
        return 0.0
    abs_tol, rel_tol, max_depth = _tolerances(policy, abs_tol, rel_tol, max_depth)
    gf, hf = as_function(g), as_function(h)
    G = CumulativeIntegral(gf, xi, t, abs_tol, rel_tol, max_depth)
    Gt = G.total
    return adaptive_simpson(lambda tau: math.exp(G(tau) - Gt) * hf(tau), xi, t, abs_tol, rel_tol, max_depth)
