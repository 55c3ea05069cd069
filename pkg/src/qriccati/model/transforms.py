"""Sign-normalising substitutions q -> -q, q -> conj(q), q -> u p (u in {i, j, k}).

Each transform returns the coefficients of the equation satisfied by the new
unknown p, and the pair of state maps between p and q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..coeffexpr.config import ProblemSpec
from ..coeffexpr.expr import Expr, linear_combination, simplify
from ..coeffexpr.expr import Neg
from ..errors import PreconditionError
from ..quatcore import ONE, QI, QJ, QK, Quaternion, quat_to_state, state_to_quat

_BASIS = (ONE, QI, QJ, QK)
_UNITS = {"i": QI, "j": QJ, "k": QK}


@dataclass(frozen=True)
class Transform:
    kind: str
    unit: str | None = None

    @property
    def u(self) -> Quaternion | None:
        return _UNITS[self.unit] if self.unit else None

    def to_new(self, state) -> np.ndarray:
        """Map a state of the original unknown q to the new unknown p."""
        q = state_to_quat(state)
        if self.kind == "negate":
            p = -q
        elif self.kind == "conjugate":
            p = q.conj()
        else:
            p = self.u.inverse() * q
        return quat_to_state(p)

    def to_original(self, state) -> np.ndarray:
        """Map a state of p back to q."""
        p = state_to_quat(state)
        if self.kind == "negate":
            q = -p
        elif self.kind == "conjugate":
            q = p.conj()
        else:
            q = self.u * p
        return quat_to_state(q)

    def map_back(self, states) -> np.ndarray:
        """Row-wise :meth:`to_original` on an (N, 4) array of p-states."""
        return np.array([self.to_original(s) for s in np.asarray(states, dtype=float)])


def _parse_kind(kind) -> Transform:
    if isinstance(kind, Transform):
        return kind
    if kind in ("negate", "conjugate"):
        return Transform(kind)
    if isinstance(kind, tuple) and len(kind) == 2 and kind[0] == "left_unit":
        unit = kind[1]
    elif isinstance(kind, str) and kind.startswith("left_unit"):
        unit = kind[len("left_unit"):].strip("():= ")
    else:
        raise PreconditionError(f"unknown transform {kind!r}")
    if unit not in _UNITS:
        raise PreconditionError(f"invalid unit {unit!r}: left_unit needs u in {{i, j, k}}")
    return Transform("left_unit", unit)


def _apply(matrix_of, comps) -> tuple[Expr, ...]:
    # matrix_of(e_j) is the image of basis quaternion e_j under a real-linear map
    images = [tuple(matrix_of(e)) for e in _BASIS]
    return tuple(
        linear_combination((images[j][k], comps[j]) for j in range(4)) for k in range(4))


def _neg(comps):
    return tuple(simplify(Neg(e)) for e in comps)


def transform_coefficients(ps: ProblemSpec, kind) -> ProblemSpec:
    """Coefficients of the equation for the transformed unknown.

    ``kind`` is ``"negate"``, ``"conjugate"``, ``("left_unit", u)`` or
    ``"left_unit(u)"`` with ``u`` one of ``"i"``, ``"j"``, ``"k"``.  The
    initial data ``gamma`` is transformed too.
    """
    tr = _parse_kind(kind)
    if tr.kind == "negate":
        a, b, c, d = _neg(ps.a), ps.b, ps.c, _neg(ps.d)
    elif tr.kind == "conjugate":
        conj = lambda comps: (comps[0],) + _neg(comps[1:])  # noqa: E731
        a, b, c, d = conj(ps.a), conj(ps.c), conj(ps.b), conj(ps.d)
    else:
        u = tr.u
        ui = u.inverse()
        a = _apply(lambda e: e * u, ps.a)
        b = _apply(lambda e: ui * e * u, ps.b)
        c = ps.c
        d = _apply(lambda e: ui * e, ps.d)
    gamma = tuple(float(v) + 0.0 for v in tr.to_new(ps.gamma))
    return ps.replace(a=a, b=b, c=c, d=d, gamma=gamma)


def transform_of(kind) -> Transform:
    """The :class:`Transform` object (state maps) for ``kind``."""
    return _parse_kind(kind)
