"""Envelope functions and the Gamma data of the sign-changing criterion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..coeffexpr.config import ENVELOPE_KEYS, ProblemSpec
from ..coeffexpr.expr import Expr, compile_many, const, diff
from ..coeffexpr.parser import parse_expr
from ..errors import EnvelopeError, PreconditionError, UnboundedBracketError
from ..model.coefficients import TAU_ZERO, CoefficientEvaluator
from ..model.quadrature import CumulativeIntegral
from .verdict import make_grid

#: |bracket0| above this is treated as unbounded
BRACKET_BOUND = 1e12
#: midpoint refinement levels for the running sup
SUP_REFINEMENT = 3


def _to_expr(v) -> Expr | None:
    if v is None or isinstance(v, Expr):
        return v
    if isinstance(v, (int, float)):
        return const(float(v))
    return parse_expr(str(v))


def _grid_values(e: Expr, ts) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    return np.broadcast_to(np.asarray(e.evaluate(ts), dtype=float), ts.shape).copy()


@dataclass(frozen=True)
class EnvelopeSet:
    """Either the pair (alpha, beta) or the four functions alpha_m, beta_m.

    Derivatives are symbolic and built on construction.
    """

    alpha: Expr | None = None
    beta: Expr | None = None
    alpha1: Expr | None = None
    alpha2: Expr | None = None
    beta1: Expr | None = None
    beta2: Expr | None = None
    derivatives: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for name in ENVELOPE_KEYS:
            object.__setattr__(self, name, _to_expr(getattr(self, name)))
        self.derivatives.clear()
        for name in ENVELOPE_KEYS:
            e = getattr(self, name)
            if e is not None:
                self.derivatives[name] = diff(e)

    @classmethod
    def pair(cls, alpha, beta) -> EnvelopeSet:
        return cls(alpha=alpha, beta=beta)

    @classmethod
    def quad(cls, alpha1, alpha2, beta1, beta2) -> EnvelopeSet:
        return cls(alpha1=alpha1, alpha2=alpha2, beta1=beta1, beta2=beta2)

    @classmethod
    def from_spec(cls, ps: ProblemSpec) -> EnvelopeSet:
        return cls(**{k: v for k, v in ps.envelopes.items()})

    @classmethod
    def coerce(cls, env, ps: ProblemSpec) -> EnvelopeSet:
        if env is None:
            return cls.from_spec(ps)
        if isinstance(env, EnvelopeSet):
            return env
        return cls(**dict(env))

    def has_pair(self) -> bool:
        return self.alpha is not None and self.beta is not None

    def has_quad(self) -> bool:
        return None not in (self.alpha1, self.alpha2, self.beta1, self.beta2)

    def contains_abs(self) -> bool:
        return any(getattr(self, k) is not None and getattr(self, k).contains_abs() for k in ENVELOPE_KEYS)

    def values(self, name: str, ts) -> np.ndarray:
        e = getattr(self, name)
        if e is None:
            raise PreconditionError(f"envelope {name} is not set")
        return _grid_values(e, ts)

    def dvalues(self, name: str, ts) -> np.ndarray:
        if name not in self.derivatives:
            raise PreconditionError(f"envelope {name} is not set")
        return _grid_values(self.derivatives[name], ts)

    def as_dict(self) -> dict[str, Expr]:
        return {k: getattr(self, k) for k in ENVELOPE_KEYS if getattr(self, k) is not None}


def require_pair(env: EnvelopeSet, ts) -> tuple[np.ndarray, np.ndarray]:
    if not env.has_pair():
        raise EnvelopeError("this criterion needs the envelopes alpha and beta")
    al, be = env.values("alpha", ts), env.values("beta", ts)
    for name, v in (("alpha", al), ("beta", be)):
        bad = ~(v > 0)
        if bad.any():
            raise EnvelopeError(f"{name}(t) > 0 required; fails at t={float(np.asarray(ts)[bad][0])!r}")
    return al, be


def require_quad(env: EnvelopeSet, ts) -> dict[str, np.ndarray]:
    if not env.has_quad():
        raise EnvelopeError("this criterion needs the envelopes alpha1, alpha2, beta1, beta2")
    out = {}
    for name, sign in (("alpha1", -1), ("alpha2", 1), ("beta1", -1), ("beta2", 1)):
        v = env.values(name, ts)
        bad = ~(sign * v > 0)
        if bad.any():
            rel = "< 0" if sign < 0 else "> 0"
            raise EnvelopeError(f"{name}(t) {rel} required; fails at t={float(np.asarray(ts)[bad][0])!r}")
        out[name] = v
    return out


def bracket0_values(co: np.ndarray, tau_zero: float = TAU_ZERO) -> np.ndarray:
    """``sqrt(sum_n (b_n + c_n)^2) / a_0`` where |a_0| > tau_zero, else 0."""
    a0 = co[0, 0]
    num = np.sqrt(np.sum((co[1, 1:4] + co[2, 1:4]) ** 2, axis=0))
    safe = np.abs(a0) > tau_zero
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(safe, num / np.where(safe, a0, 1.0), 0.0)


def refine(ts, levels: int = SUP_REFINEMENT) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    for _ in range(levels):
        if len(ts) < 2:
            break
        mids = 0.5 * (ts[:-1] + ts[1:])
        out = np.empty(2 * len(ts) - 1)
        out[0::2] = ts
        out[1::2] = mids
        ts = out
    return ts


@dataclass(frozen=True)
class GammaData:
    """``M``, ``R`` (forward) and ``M_star``, ``R_star`` (reversed), vectorised in t.

    Functions for a direction that was not requested are None.
    """

    Gamma: float
    direction: str
    window: tuple[float, float]
    bracket0: Callable
    M_of_t: Callable | None = None
    R_of_t: Callable | None = None
    M_star_of_t: Callable | None = None
    R_star_of_t: Callable | None = None


def gamma_data(ps: ProblemSpec, Gamma: float, direction: str = "forward", grid=None) -> GammaData:
    """Running quantities of the sign-changing criterion.

    ``direction="forward"``: ``M(t) = int_t0^t |d_v| + sup_[t0,t] bracket0 / 2``
    and ``R = |a0| (Gamma + M)^2 + sum |b_n + c_n| (Gamma + M)``.
    ``direction="reversed"``: the starred versions over ``[t, tau0]``.
    The sup runs over the grid refined three times by midpoints.  Raises
    UnboundedBracketError when |bracket0| exceeds 1e12 there.
    """
    if not Gamma > 0:
        raise PreconditionError("Gamma > 0 required")
    if direction not in ("forward", "reversed"):
        raise PreconditionError(f"unknown direction {direction!r}")
    if direction == "reversed" and not ps.finite_horizon:
        raise PreconditionError("τ0 < ∞ required")
    g = make_grid(ps, grid)
    lo, hi = float(g.times[0]), float(g.times[-1])
    ev = CoefficientEvaluator(ps)

    def bracket0(t):
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        v = bracket0_values(ev.on_grid(tt))
        return float(v[0]) if scalar else v

    rts = refine(g.times)
    bv = bracket0(rts)
    big = np.abs(bv) > BRACKET_BOUND
    if big.any():
        i = int(np.argmax(big))
        raise UnboundedBracketError(float(rts[i]), float(bv[i]))

    dv = ps.d[1:4]
    if all(e.is_constant() and e.evaluate(0.0) == 0.0 for e in dv):
        cum = None
    else:
        f = compile_many(dv)
        cum = CumulativeIntegral(lambda t: math.sqrt(sum(x * x for x in f(t))), lo, hi)

    def integral_from_start(tt):
        return np.zeros_like(tt) if cum is None else np.asarray(cum(tt), dtype=float)

    def r_of(M_fn):
        def R(t):
            scalar = np.ndim(t) == 0
            tt = np.atleast_1d(np.asarray(t, dtype=float))
            co = ev.on_grid(tt)
            GM = Gamma + M_fn(tt)
            v = np.abs(co[0, 0]) * GM ** 2 + np.sum(np.abs(co[1, 1:4] + co[2, 1:4]), axis=0) * GM
            return float(v[0]) if scalar else v
        return R

    if direction == "forward":
        run = np.maximum.accumulate(bv)

        def M(t):
            scalar = np.ndim(t) == 0
            tt = np.atleast_1d(np.asarray(t, dtype=float))
            idx = np.clip(np.searchsorted(rts, tt, side="right") - 1, 0, len(rts) - 1)
            sup = np.maximum(run[idx], bracket0(tt))
            v = integral_from_start(tt) + 0.5 * sup
            return float(v[0]) if scalar else v

        return GammaData(Gamma, direction, (lo, hi), bracket0, M_of_t=M, R_of_t=r_of(M))

    run = np.maximum.accumulate(bv[::-1])[::-1]
    total = 0.0 if cum is None else cum.total

    def M_star(t):
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(rts, tt, side="left"), 0, len(rts) - 1)
        sup = np.maximum(run[idx], bracket0(tt))
        v = (total - integral_from_start(tt)) + 0.5 * sup
        return float(v[0]) if scalar else v

    return GammaData(Gamma, direction, (lo, hi), bracket0, M_star_of_t=M_star, R_star_of_t=r_of(M_star))
