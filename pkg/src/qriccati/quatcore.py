"""Quaternion values, the Hamilton product and the 4x4 real symbol map.

The symbol of ``m = m0 + i m1 + j m2 + k m3`` is the real matrix
``m0 E + m1 I + m2 J + m3 K``; it turns quaternion multiplication into matrix
multiplication.

Riccati states are stored as ``(q0, q1, q2, q3)`` with the quaternion
``q = q0 - i q1 - j q2 - k q3``.  Use :func:`state_to_quat` and
:func:`quat_to_state` to move between the two; never reinterpret the arrays
directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import SymbolPatternError, ZeroDivisorError

#: Absolute tolerance used by :func:`unsymbol` to validate the sign pattern.
TAU_SYM = 1e-9


@dataclass(frozen=True, slots=True)
class Quaternion:
    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, a: Iterable[float]) -> Quaternion:
        w, x, y, z = (float(v) for v in a)
        return cls(w, x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z], dtype=float)

    def __iter__(self):
        return iter((self.w, self.x, self.y, self.z))

    def __add__(self, other: Quaternion) -> Quaternion:
        return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Quaternion) -> Quaternion:
        return Quaternion(self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> Quaternion:
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return quat_mul(self, other)
        s = float(other)
        return Quaternion(self.w * s, self.x * s, self.y * s, self.z * s)

    def __rmul__(self, other):
        s = float(other)
        return Quaternion(self.w * s, self.x * s, self.y * s, self.z * s)

    def conj(self) -> Quaternion:
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def inverse(self) -> Quaternion:
        n2 = self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
        if n2 == 0.0:
            raise ZeroDivisorError("the zero quaternion has no inverse")
        return Quaternion(self.w / n2, -self.x / n2, -self.y / n2, -self.z / n2)

    def __str__(self) -> str:
        return f"{self.w!r} + {self.x!r}i + {self.y!r}j + {self.z!r}k"


ONE = Quaternion(1.0, 0.0, 0.0, 0.0)
QI = Quaternion(0.0, 1.0, 0.0, 0.0)
QJ = Quaternion(0.0, 0.0, 1.0, 0.0)
QK = Quaternion(0.0, 0.0, 0.0, 1.0)


def quat_mul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product ``p q`` (i^2 = j^2 = k^2 = ijk = -1)."""
    return Quaternion(
        p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
        p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
        p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
        p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
    )


def quat_conj_norm_inv(q: Quaternion) -> tuple[Quaternion, float, Quaternion]:
    """Return ``(conj(q), norm(q), q^-1)``; raises ZeroDivisorError for q = 0."""
    return q.conj(), q.norm(), q.inverse()


def mul_arrays(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product on component arrays of shape (4, ...)."""
    p0, p1, p2, p3 = p
    q0, q1, q2, q3 = q
    return np.array([
        p0 * q0 - p1 * q1 - p2 * q2 - p3 * q3,
        p0 * q1 + p1 * q0 + p2 * q3 - p3 * q2,
        p0 * q2 - p1 * q3 + p2 * q0 + p3 * q1,
        p0 * q3 + p1 * q2 - p2 * q1 + p3 * q0,
    ])


def symbol_array(m) -> np.ndarray:
    """Symbol matrix from raw components ``(m0, m1, m2, m3)``."""
    m0, m1, m2, m3 = (float(v) for v in m)
    return np.array([
        [m0, m1, m2, -m3],
        [-m1, m0, -m3, -m2],
        [-m2, m3, m0, m1],
        [m3, m2, -m1, m0],
    ])


def symbol(q: Quaternion) -> np.ndarray:
    """The 4x4 real symbol of ``q``."""
    return symbol_array((q.w, q.x, q.y, q.z))


E = symbol(ONE)
I = symbol(QI)  # noqa: E741
J = symbol(QJ)
K = symbol(QK)

# Each component m_k appears in four entries with a fixed sign; the first
# listed entry is the one unsymbol reads from.
_PATTERN = {
    0: (((0, 0), 1), ((1, 1), 1), ((2, 2), 1), ((3, 3), 1)),
    1: (((0, 1), 1), ((1, 0), -1), ((2, 3), 1), ((3, 2), -1)),
    2: (((0, 2), 1), ((2, 0), -1), ((3, 1), 1), ((1, 3), -1)),
    3: (((3, 0), 1), ((0, 3), -1), ((1, 2), -1), ((2, 1), 1)),
}


def unsymbol(M, tol: float = TAU_SYM) -> Quaternion:
    """Inverse of :func:`symbol`.

    Every entry of ``M`` is checked against the sign pattern within ``tol``
    (absolute); the first offending pair is reported in the error.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (4, 4):
        raise SymbolPatternError((0, 0), (0, 0), float("inf"))
    comps = []
    for k in range(4):
        (ref, ref_sign), *rest = _PATTERN[k]
        value = ref_sign * M[ref]
        for entry, sign in rest:
            dev = abs(sign * M[entry] - value)
            if not dev <= tol:
                raise SymbolPatternError(ref, entry, dev)
        comps.append(value)
    return Quaternion(*comps)


def vec_part(q: Quaternion) -> np.ndarray:
    return np.array([q.x, q.y, q.z], dtype=float)


def state_to_quat(state) -> Quaternion:
    """``(q0, q1, q2, q3)`` -> ``q0 - i q1 - j q2 - k q3``."""
    q0, q1, q2, q3 = (float(v) for v in state)
    return Quaternion(q0, -q1, -q2, -q3)


def quat_to_state(q: Quaternion) -> np.ndarray:
    return np.array([q.w, -q.x, -q.y, -q.z], dtype=float)


def state_symbol(state) -> np.ndarray:
    """Symbol of the quaternion represented by a Riccati state vector."""
    q0, q1, q2, q3 = state
    return symbol_array((q0, -q1, -q2, -q3))
