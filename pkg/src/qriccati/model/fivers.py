"""Fivers (p, q, r, s, l), the quadratic form W and epsilon-positivity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..coeffexpr.config import ProblemSpec
from ..errors import PreconditionError
from .coefficients import DerivedCoefficients, d_values, p_values


class Fiver(NamedTuple):
    p: float
    q: float
    r: float
    s: float
    l: float  # noqa: E741


class FiverCheck(NamedTuple):
    ok: bool
    reason: str
    slack: float


def eval_W(f: Fiver, x: float, y: float, z: float) -> float:
    """``W = p[(x + q/2p)^2 + (y + r/2p)^2 + (z + s/2p)^2] - l/(4p)``."""
    p, q, r, s, l = f  # noqa: E741
    if p == 0:
        raise PreconditionError("W is undefined for p = 0")
    return p * ((x + q / (2 * p)) ** 2 + (y + r / (2 * p)) ** 2 + (z + s / (2 * p)) ** 2) - l / (4 * p)


def check_fiver_eps(f: Fiver, eps: float, strict_source: bool = False, tol: float = 0.0) -> FiverCheck:
    """Epsilon-semi-definite positivity of a fiver.

    Passes iff p > 0, l > 0 and either max{q,r,s} >= sqrt(l+eps) or
    0 <= min{q,r,s} <= max{q,r,s} <= sqrt(l+eps) with q^2+r^2+s^2 >= l+eps.
    ``strict_source`` replaces the last right-hand side with the literal
    ``l + s``.  ``tol`` relaxes the non-strict inequalities.  The returned
    slack is positive when the test passes with room to spare.
    """
    if not eps > 0:
        raise PreconditionError("epsilon > 0 required")
    p, q, r, s, l = (float(v) for v in f)  # noqa: E741
    if not p > 0:
        return FiverCheck(False, "p > 0", p)
    if not l > 0:
        return FiverCheck(False, "l > 0", l)
    root = math.sqrt(l + eps)
    lo, hi = min(q, r, s), max(q, r, s)
    rhs = l + s if strict_source else l + eps
    s1 = hi - root
    s2 = min(lo, root - hi, q * q + r * r + s * s - rhs)
    slack = max(s1, s2)
    if s1 >= -tol:
        return FiverCheck(True, "max{q,r,s} >= sqrt(l+eps)", slack)
    if s2 >= -tol:
        return FiverCheck(True, "sum of squares branch", slack)
    return FiverCheck(False, "neither branch", slack)


def fiver_arrays(a, b, c, d, tau_zero: float) -> np.ndarray:
    """All four fivers from coefficient arrays; shape (4 fivers, 5, ...)."""
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    D = d_values(a, p_values(b, c), d, tau_zero)
    b1, b2, b3 = b[1], b[2], b[3]
    c1, c2, c3 = c[1], c[2], c[3]
    return np.array([
        [a[0], -(b1 + c1), -(b2 + c2), -(b3 + c3), D[0]],
        [a[1], b1 + c1, -b2 + c2, b3 - c3, D[1]],
        [a[2], b1 - c1, b2 + c2, b3 - c3, D[2]],
        [a[3], -b1 + c1, b2 - c2, b3 + c3, D[3]],
    ])


@dataclass(frozen=True)
class FiverMaps:
    """``maps(t)`` gives the fivers L_0..L_3 at t; ``maps.on_grid(ts)`` the arrays."""

    dc: DerivedCoefficients

    def on_grid(self, ts) -> np.ndarray:
        co = self.dc.evaluator.on_grid(ts)
        return fiver_arrays(co[0], co[1], co[2], co[3], self.dc.tau_zero)

    def __call__(self, t: float) -> tuple[Fiver, Fiver, Fiver, Fiver]:
        co = self.dc.evaluator(t)
        arr = fiver_arrays(co[0], co[1], co[2], co[3], self.dc.tau_zero)
        return tuple(Fiver(*(float(v) for v in row)) for row in arr)

    def component(self, n: int):
        return lambda t: self(t)[n]


def build_fivers(dc: DerivedCoefficients, ps: ProblemSpec | None = None) -> FiverMaps:
    return FiverMaps(dc)
