"""Coefficient evaluation and the right-hand sides built from a ProblemSpec.

Three formulations of the same problem live here: the real four-component
system, the 4x4 matrix Riccati equation on symbols, and the linear
(phi, psi) system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..coeffexpr.config import ProblemSpec
from ..coeffexpr.expr import compile_many
from ..quatcore import symbol_array

#: |a_n(t)| at or below this selects the degenerate branch of D_n.
TAU_ZERO = 1e-12

# sign of c_m in p_{n,m} = b_m +/- c_m, rows n = 0..3, columns m = 1..3
_P_SIGNS = np.array([
    [1.0, 1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, -1.0],
])


class CoefficientEvaluator:
    """Evaluates all sixteen coefficient components at once.

    ``ev(t)`` returns a (4, 4) array whose rows are a, b, c, d.
    ``ev.on_grid(ts)`` returns shape (4, 4, len(ts)).
    """

    def __init__(self, ps: ProblemSpec):
        self.ps = ps
        self._exprs = tuple(e for comps in ps.coefficients for e in comps)
        self._scalar = compile_many(self._exprs)

    def __call__(self, t: float) -> np.ndarray:
        return np.array(self._scalar(float(t)), dtype=float).reshape(4, 4)

    def on_grid(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.empty((16,) + ts.shape)
        for k, e in enumerate(self._exprs):
            out[k] = np.broadcast_to(np.asarray(e.evaluate(ts), dtype=float), ts.shape)
        return out.reshape((4, 4) + ts.shape)


def p_values(b, c) -> np.ndarray:
    """p_{n,m} for n = 0..3, m = 1..3 from b and c component arrays."""
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    bv, cv = b[1:4], c[1:4]
    shape = (4, 3) + bv.shape[1:]
    out = np.empty(shape)
    for n in range(4):
        for m in range(3):
            out[n, m] = bv[m] + _P_SIGNS[n, m] * cv[m]
    return out


def d_values(a, p, d, tau_zero: float = TAU_ZERO) -> np.ndarray:
    """D_n for n = 0..3; the a_n = 0 branch is taken when |a_n| <= tau_zero."""
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    sq = np.sum(np.asarray(p) ** 2, axis=1)
    out = np.empty(sq.shape)
    sign = np.array([1.0, -1.0, -1.0, -1.0]).reshape((4,) + (1,) * (sq.ndim - 1))
    regular = sq + sign * 4.0 * a * d
    degenerate = sign * 4.0 * d
    out[...] = np.where(np.abs(a) <= tau_zero, degenerate, regular)
    return out


@dataclass(frozen=True)
class DerivedCoefficients:
    """Evaluators for p_{n,m}(t) and D_n(t).  Indices: n = 0..3, m = 1..3."""

    evaluator: CoefficientEvaluator
    tau_zero: float = TAU_ZERO

    def p_array(self, ts) -> np.ndarray:
        co = self.evaluator.on_grid(ts)
        return p_values(co[1], co[2])

    def D_array(self, ts) -> np.ndarray:
        co = self.evaluator.on_grid(ts)
        return d_values(co[0], p_values(co[1], co[2]), co[3], self.tau_zero)

    def p(self, n: int, m: int, t: float) -> float:
        co = self.evaluator(t)
        return float(p_values(co[1], co[2])[n, m - 1])

    def D(self, n: int, t: float) -> float:
        co = self.evaluator(t)
        return float(d_values(co[0], p_values(co[1], co[2]), co[3], self.tau_zero)[n])


def derived_coefficients(ps: ProblemSpec, tau_zero: float = TAU_ZERO) -> DerivedCoefficients:
    return DerivedCoefficients(CoefficientEvaluator(ps), tau_zero)


def _system(co, y):
    (a0, a1, a2, a3), (b0, b1, b2, b3), (c0, c1, c2, c3), (d0, d1, d2, d3) = co
    q0, q1, q2, q3 = y
    s = b0 + c0
    P = a0 * (q1 * q1 + q2 * q2 + q3 * q3) - (b1 + c1) * q1 - (b2 + c2) * q2 - (b3 + c3) * q3 - d0
    Q = a1 * (q0 * q0 + q2 * q2 + q3 * q3) + (b1 + c1) * q0 + (b3 - c3) * q2 - (b2 - c2) * q3 + d1
    R = a2 * (q0 * q0 + q1 * q1 + q3 * q3) + (b2 + c2) * q0 - (b3 - c3) * q1 + (b1 - c1) * q3 + d2
    S = a3 * (q0 * q0 + q1 * q1 + q2 * q2) + (b3 + c3) * q0 + (b2 - c2) * q1 - (b1 - c1) * q2 + d3
    return (
        -a0 * q0 * q0 - (s + 2.0 * (a1 * q1 + a2 * q2 + a3 * q3)) * q0 + P,
        -a1 * q1 * q1 - (s + 2.0 * (a0 * q0 + a2 * q2 + a3 * q3)) * q1 + Q,
        -a2 * q2 * q2 - (s + 2.0 * (a0 * q0 + a1 * q1 + a3 * q3)) * q2 + R,
        -a3 * q3 * q3 - (s + 2.0 * (a0 * q0 + a1 * q1 + a2 * q2)) * q3 + S,
    )


class RealRHS:
    """``(t, state) -> state'`` for the real four-component system."""

    def __init__(self, ps: ProblemSpec):
        self.ps = ps
        self._coeffs = compile_many(tuple(e for comps in ps.coefficients for e in comps))

    def coefficients(self, t: float):
        v = self._coeffs(t)
        return (v[0:4], v[4:8], v[8:12], v[12:16])

    def __call__(self, t: float, y) -> np.ndarray:
        return np.array(_system(self.coefficients(float(t)), y), dtype=float)


def real_rhs(ps: ProblemSpec) -> RealRHS:
    return RealRHS(ps)


class MatrixRiccatiRHS:
    """``Y' = -(Y A Y + B Y + Y C + D)`` on 4x4 matrices.

    ``flat`` is the same map on row-major 16-vectors, for the integrator.
    """

    def __init__(self, ps: ProblemSpec):
        self.ps = ps
        self._ev = CoefficientEvaluator(ps)

    def symbols(self, t: float):
        co = self._ev(t)
        return tuple(symbol_array(row) for row in co)

    def __call__(self, t: float, Y) -> np.ndarray:
        A, B, C, D = self.symbols(t)
        Y = np.asarray(Y, dtype=float)
        return -(Y @ A @ Y + B @ Y + Y @ C + D)

    def flat(self, t: float, y) -> np.ndarray:
        return self(t, np.asarray(y).reshape(4, 4)).reshape(16)


def matrix_riccati_rhs(ps: ProblemSpec) -> MatrixRiccatiRHS:
    return MatrixRiccatiRHS(ps)


class LinearSystemRHS:
    """``phi' = C phi + A psi``, ``psi' = -D phi - B psi`` with 4 x m blocks.

    ``flat`` packs ``(phi, psi)`` as ``concat(phi.ravel(), psi.ravel())``.
    """

    def __init__(self, ps: ProblemSpec, m: int = 1):
        if m not in (1, 4):
            raise ValueError("linear system width must be 1 or 4")
        self.ps = ps
        self.m = m
        self._ev = CoefficientEvaluator(ps)

    def symbols(self, t: float):
        co = self._ev(t)
        return tuple(symbol_array(row) for row in co)

    def __call__(self, t: float, Phi, Psi):
        A, B, C, D = self.symbols(t)
        return C @ Phi + A @ Psi, -(D @ Phi) - B @ Psi

    def pack(self, Phi, Psi) -> np.ndarray:
        return np.concatenate([np.asarray(Phi, float).reshape(-1), np.asarray(Psi, float).reshape(-1)])

    def unpack(self, y):
        y = np.asarray(y, dtype=float)
        k = 4 * self.m
        shape = (4,) if self.m == 1 else (4, 4)
        return y[:k].reshape(shape), y[k:].reshape(shape)

    def flat(self, t: float, y) -> np.ndarray:
        dphi, dpsi = self(t, *self.unpack(y))
        return self.pack(dphi, dpsi)


def linear_system_rhs(ps: ProblemSpec, m: int = 1) -> LinearSystemRHS:
    return LinearSystemRHS(ps, m)
