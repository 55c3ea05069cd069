"""Hypothesis checkers.  Each returns a :class:`Verdict`.

Pointwise conditions are evaluated on a uniform grid (plus partition
endpoints), with non-strict inequalities relaxed by ``TAU``.  Conditions that
involve envelope derivatives move to the half-step midpoint grid when an
envelope or coefficient contains ``abs``, which keeps them off kinks.
"""

from __future__ import annotations

import math

import numpy as np

from ..coeffexpr.config import ProblemSpec
from ..coeffexpr.expr import Neg, Sub, T, compile_many, const, simplify, substitute
from ..errors import PreconditionError, UnboundedBracketError
from ..model.coefficients import TAU_ZERO, CoefficientEvaluator, d_values, p_values
from ..model.fivers import check_fiver_eps, fiver_arrays
from .envelopes import EnvelopeSet, gamma_data, require_pair, require_quad
from .verdict import TAU, TAU_INT, ConditionSet, Verdict, make_grid


def _index_set(S, ps: ProblemSpec) -> tuple[int, ...]:
    if S is None:
        S = ps.S_set if ps.S_set is not None else (0, 1, 2, 3)
    S = tuple(sorted(set(int(n) for n in S)))
    if not S or any(n not in (0, 1, 2, 3) for n in S):
        raise PreconditionError("S must be a nonempty subset of {0,1,2,3}")
    return S


def _any_abs(ps: ProblemSpec, env: EnvelopeSet | None = None) -> bool:
    if env is not None and env.contains_abs():
        return True
    return any(e.contains_abs() for comps in ps.coefficients for e in comps)


def check_thm_3_1(ps: ProblemSpec, S=None, grid=None) -> Verdict:
    """Sign criterion on the index set S (all of {0,1,2,3} by default).

    Conditions, in order: a_n >= 0 (n in S); p_{n,m} = 0 where a_n = 0
    (n in S); a_n = 0 off S; D_n <= 0 (n in S).
    """
    S = _index_set(S, ps)
    g = make_grid(ps, grid)
    ts = g.times
    co = CoefficientEvaluator(ps).on_grid(ts)
    a = co[0]
    p = p_values(co[1], co[2])
    D = d_values(a, p, co[3])
    cs = ConditionSet()
    for n in S:
        cs.add(f"a_{n} ≥ 0", ts, a[n])
    for n in S:
        degenerate = np.abs(a[n]) <= TAU_ZERO
        worst = np.max(np.abs(p[n]), axis=0)
        cs.add(f"p_{n},m = 0 where a_{n} = 0", ts, np.where(degenerate, -worst, np.inf), equality=True)
    others = [n for n in range(4) if n not in S]
    if others:
        cs.add("a_n ≡ 0 for n ∈ 𝔒", ts, -np.max(np.abs(a[others]), axis=0), equality=True)
    for n in S:
        cs.add(f"D_{n} ≤ 0", ts, -D[n])
    return cs.verdict("thm31", g.description, {"S": S})


def check_thm_3_2(ps: ProblemSpec, eps=None, grid=None, strict_source: bool = False) -> Verdict:
    """Every fiver L_0..L_3 epsilon-semi-definite positive on the grid."""
    eps = ps.epsilon if eps is None else eps
    if eps is None or not eps > 0:
        raise PreconditionError("epsilon > 0 required")
    g = make_grid(ps, grid)
    ts = g.times
    co = CoefficientEvaluator(ps).on_grid(ts)
    fv = fiver_arrays(co[0], co[1], co[2], co[3], TAU_ZERO)
    cs = ConditionSet()
    for n in range(4):
        checks = [check_fiver_eps(fv[n, :, i], eps, strict_source, tol=TAU) for i in range(len(ts))]
        ok = np.array([c.ok for c in checks])
        slack = np.array([c.slack for c in checks])
        cs.add(f"fiver L_{n}", ts, slack, ok=ok)
    return cs.verdict("thm32", g.description, {"eps": float(eps), "strict_source": strict_source})


def _cells(ps: ProblemSpec, partition, hi: float) -> list[tuple[float, float]]:
    pts = sorted({ps.t0, hi, *[p for p in (partition or ()) if ps.t0 <= p <= hi]})
    return list(zip(pts[:-1], pts[1:]))


class PartitionIntegral:
    """``F(t) = int_lo^t exp(Lambda(tau)) D_0(tau) dtau`` on one partition cell.

    ``Lambda(tau) = int_lo^tau [s_0 - I_{s_0, D_0}(lo, s)] ds`` with
    ``s_0 = b_0 + c_0``.  Exponential weights overflow quickly (Lambda grows
    like t^2 when D_0 < 0), so F is never formed directly.  Instead

        I' = D_0 - s_0 I,   Lambda' = s_0 - I,   mu' = max(Lambda', 0),
        v' = exp(Lambda - mu) D_0 - mu' v

    is integrated from zero, with ``v = F exp(-mu)``.  Since mu >= Lambda the
    weight never exceeds 1 and v stays bounded; the sign of F is the sign of
    v and ``log|F| = mu + log|v|``.
    """

    def __init__(self, ps: ProblemSpec, lo: float, hi: float, policy=None):
        from ..integrator import NumericPolicy, integrate_ivp
        from ..errors import IntegrationError

        f = compile_many(tuple(e for comps in ps.coefficients for e in comps))

        def rhs(t, y):
            v = f(t)
            a, b, c, d = np.array(v[0:4]), np.array(v[4:8]), np.array(v[8:12]), np.array(v[12:16])
            D0 = float(d_values(a, p_values(b, c), d)[0])
            s0 = b[0] + c[0]
            lam_dot = s0 - y[0]
            mu_dot = max(lam_dot, 0.0)
            return np.array([D0 - s0 * y[0], lam_dot, mu_dot, math.exp(y[1] - y[2]) * D0 - mu_dot * y[3]])

        policy = policy or NumericPolicy(rtol=1e-11, atol=1e-13, blowup_norm=1e300)
        self.lo, self.hi = lo, hi
        self.traj = integrate_ivp(rhs, np.zeros(4), lo, hi, policy)
        if not self.traj.completed:
            raise IntegrationError(
                f"partition integral on [{lo!r}, {hi!r}] stopped ({self.traj.status} at t={self.traj.t_status!r})")

    def log_abs_and_sign(self, ts):
        ys = self.traj.dense(np.asarray(ts, dtype=float))
        v = ys[:, 3]
        with np.errstate(divide="ignore"):
            return ys[:, 2] + np.log(np.abs(v)), np.sign(v)

    def __call__(self, ts):
        scalar = np.ndim(ts) == 0
        logF, sign = self.log_abs_and_sign(np.atleast_1d(ts))
        with np.errstate(over="ignore"):
            v = sign * np.exp(logF)
        return float(v[0]) if scalar else v

    def condition(self, ts, tol: float = TAU_INT):
        """``(ok, slack)`` for ``F(t) <= tol``; slack = -F, capped at +-1e300."""
        logF, sign = self.log_abs_and_sign(ts)
        ok = (sign <= 0) | (logF <= math.log(tol))
        slack = -sign * np.exp(np.minimum(logF, math.log(1e300)))
        return ok, slack


def partition_integral(ps: ProblemSpec, lo: float, hi: float, policy=None) -> PartitionIntegral:
    return PartitionIntegral(ps, lo, hi, policy)


def check_thm_3_3(ps: ProblemSpec, partition=None, grid=None) -> Verdict:
    """Partition criterion allowing D_0 to change sign.

    Conditions: a_n = 0 (n = 1..3); a_0 >= 0; on each cell [t_m, t_m+1) the
    integral F(t) of :func:`partition_integral` is <= TAU_INT at every grid
    point.  The cells are cut by t0, the partition points and the horizon;
    the first cell is checked too.
    """
    partition = ps.partition if partition is None else tuple(partition)
    g = make_grid(ps, grid, extra=partition or ())
    ts = g.times
    co = CoefficientEvaluator(ps).on_grid(ts)
    cs = ConditionSet()
    cs.add("a_n ≡ 0, n = 1..3", ts, -np.max(np.abs(co[0, 1:4]), axis=0), equality=True)
    cs.add("a_0 ≥ 0", ts, co[0, 0])
    hi = float(ts[-1])
    cells = _cells(ps, partition, hi)
    for m, (lo, up) in enumerate(cells):
        last = m == len(cells) - 1
        mask = (ts >= lo) & ((ts <= up) if last else (ts < up))
        cell_ts = ts[mask]
        ok, slack = partition_integral(ps, lo, up).condition(cell_ts)
        cs.add(f"integral condition on cell {m} [{lo:.6g}, {up:.6g})", cell_ts, slack, ok=ok)
    return cs.verdict("thm33", g.description, {"partition": tuple(partition or ()), "cells": tuple(cells)})


def _envelope_core(ps, env, grid, strict_source):
    env = EnvelopeSet.coerce(env, ps)
    g = make_grid(ps, grid)
    ts = g.times
    ev = CoefficientEvaluator(ps)
    co = ev.on_grid(ts)
    al, be = require_pair(env, ts)
    D = d_values(co[0], p_values(co[1], co[2]), co[3])
    cs = ConditionSet()
    cs.add("A₁) 0 ≤ a_0", ts, co[0, 0])
    cs.add("A₁) a_0 ≤ α", ts, al - co[0, 0])
    cs.add("A₁) D_0 ≤ β", ts, be - D[0])
    cs.add("A₁) a_n ≡ 0, n = 1..3", ts, -np.max(np.abs(co[0, 1:4]), axis=0), equality=True)
    dts = g.midpoints if _any_abs(ps, env) else ts
    dco = ev.on_grid(dts) if dts is not ts else co
    dal, dbe = require_pair(env, dts)
    log_term = 0.5 * (env.dvalues("alpha", dts) / dal - env.dvalues("beta", dts) / dbe)
    root = (2.0 if strict_source else 1.0) * np.sqrt(dal * dbe)
    s0 = dco[1, 0] + dco[2, 0]
    desc = g.description + (" (derivative terms on midpoints)" if dts is not ts else "")
    return env, cs, dts, log_term, root, s0, desc


def check_thm_3_4(ps: ProblemSpec, env=None, grid=None, strict_source: bool = False) -> Verdict:
    """Lower envelope criterion: A₁) and B₁) b_0 + c_0 >= (α'/α - β'/β)/2 + sqrt(αβ).

    ``strict_source`` doubles the square-root term.
    """
    env, cs, dts, log_term, root, s0, desc = _envelope_core(ps, env, grid, strict_source)
    cs.add("B₁)", dts, s0 - (log_term + root))
    return cs.verdict("thm34", desc, {"env": env, "strict_source": strict_source})


def check_thm_3_5(ps: ProblemSpec, env=None, grid=None, strict_source: bool = False) -> Verdict:
    """Upper envelope criterion: A₁) and C₁) b_0 + c_0 <= (α'/α - β'/β)/2 - sqrt(αβ)."""
    env, cs, dts, log_term, root, s0, desc = _envelope_core(ps, env, grid, strict_source)
    cs.add("C₁)", dts, (log_term - root) - s0)
    return cs.verdict("thm35", desc, {"env": env, "strict_source": strict_source})


def roots_of(f, ts, iterations: int = 80) -> list[float]:
    """Sign changes of the scalar function ``f`` between consecutive grid points."""
    vals = np.array([f(t) for t in ts])
    out = []
    for i in range(len(ts) - 1):
        if vals[i] * vals[i + 1] < 0:
            lo, hi = float(ts[i]), float(ts[i + 1])
            flo = vals[i]
            for _ in range(iterations):
                mid = 0.5 * (lo + hi)
                fm = f(mid)
                if fm == 0:
                    lo = hi = mid
                    break
                if (fm > 0) == (flo > 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            out.append(0.5 * (lo + hi))
    return out


def check_thm_4_1(ps: ProblemSpec, env=None, Gamma=None, grid=None) -> Verdict:
    """Sign-changing criterion with envelopes α_1, β_1 < 0 < α_2, β_2.

    Conditions are reported in the order 1), 5), 2), 3), 4); the support
    condition goes first among the rest because R_Γ is only defined once the
    bracket is bounded.  Condition 5) is also checked at the roots of a_0.
    """
    env = EnvelopeSet.coerce(env, ps)
    Gamma = ps.Gamma if Gamma is None else Gamma
    if Gamma is None or not Gamma > 0:
        raise PreconditionError("Gamma > 0 required")
    g = make_grid(ps, grid)
    ts = g.times
    envs = require_quad(env, ts)
    ev = CoefficientEvaluator(ps)
    co = ev.on_grid(ts)
    cs = ConditionSet()
    cs.add("condition 1)", ts, -np.max(np.abs(co[0, 1:4]), axis=0), equality=True)

    a0 = ps.a[0]
    roots = roots_of(lambda t: float(a0.evaluate(t)), ts)
    sts = np.unique(np.concatenate([ts, roots])) if roots else ts
    sco = ev.on_grid(sts)
    degenerate = np.abs(sco[0, 0]) <= TAU_ZERO
    worst = np.max(np.abs(sco[1, 1:4] + sco[2, 1:4]), axis=0)
    cs.add("condition 5)", sts, np.where(degenerate, -worst, np.inf), equality=True)
    params = {"env": env, "Gamma": float(Gamma)}
    try:
        gd = gamma_data(ps, Gamma, "forward", grid=ts)
    except UnboundedBracketError as exc:
        cs.fail("condition 5)", exc.t)
        return cs.verdict("thm41", g.description, params)
    params["gamma_data"] = gd

    R = gd.R_of_t(ts)
    cs.add("condition 2) a_0", ts, np.minimum(co[0, 0] - envs["alpha1"], envs["alpha2"] - co[0, 0]))
    Rd = R + co[3, 0]
    cs.add("condition 2) R_Γ + d_0", ts, np.minimum(Rd - envs["beta1"], envs["beta2"] - Rd))

    dts = g.midpoints if _any_abs(ps, env) else ts
    dco = ev.on_grid(dts) if dts is not ts else co
    s0 = dco[1, 0] + dco[2, 0]
    for m in (1, 2):
        al, be = env.values(f"alpha{m}", dts), env.values(f"beta{m}", dts)
        rhs = 0.5 * (env.dvalues(f"alpha{m}", dts) / al - env.dvalues(f"beta{m}", dts) / be) \
            + 2.0 * (-1) ** m * np.sqrt(al * be)
        cs.add(f"condition 3) m={m}", dts, s0 - rhs)
    cs.add("condition 4)", ts, co[1, 0] + co[2, 0] - 2.0 * np.abs(co[0, 0]) * R)
    desc = g.description + (" (derivative terms on midpoints)" if dts is not ts else "")
    return cs.verdict("thm41", desc, params)


def reversed_problem(ps: ProblemSpec) -> tuple[ProblemSpec, float]:
    """Coefficients of ``u(t) = q(λ0 - t)``, ``λ0 = t0 + τ0``: each x(t) -> -x(λ0 - t).

    Envelopes are reflected as α̃_m(t) = -α_{3-m}(λ0 - t) (same for β); the
    initial data of the reversed problem is the terminal data of ``ps``.
    """
    if not ps.finite_horizon:
        raise PreconditionError("τ0 < ∞ required")
    lam = ps.t0 + ps.horizon
    arg = Sub(const(lam), T)

    def flip(e):
        return simplify(Neg(substitute(e, arg)))

    coeffs = {name: tuple(flip(e) for e in getattr(ps, name)) for name in ("a", "b", "c", "d")}
    env = {}
    pairs = {"alpha1": "alpha2", "alpha2": "alpha1", "beta1": "beta2", "beta2": "beta1"}
    for key, src in pairs.items():
        if src in ps.envelopes:
            env[key] = flip(ps.envelopes[src])
    for key in ("alpha", "beta"):
        if key in ps.envelopes:
            env[key] = simplify(substitute(ps.envelopes[key], arg))
    partition = None
    if ps.partition is not None:
        partition = tuple(sorted(lam - p for p in ps.partition))
    rev = ps.replace(envelopes=env, partition=partition, **coeffs)
    return rev, lam


def _reflect_envelopes(env: EnvelopeSet, lam: float) -> EnvelopeSet:
    arg = Sub(const(lam), T)

    def flip(e):
        return simplify(Neg(substitute(e, arg)))

    return EnvelopeSet.quad(flip(env.alpha2), flip(env.alpha1), flip(env.beta2), flip(env.beta1))


_COR_LABELS = {
    "condition 1)": "1)",
    "condition 2) a_0": "1*)",
    "condition 2) R_Γ + d_0": "R*_Γ + d_0 bounds (from reversal)",
    "condition 3) m=1": "2*) m=2",
    "condition 3) m=2": "2*) m=1",
    "condition 4)": "3*)",
    "condition 5)": "4*)",
}


def check_cor_4_1(ps: ProblemSpec, env=None, Gamma=None, grid=None) -> Verdict:
    """Terminal-value version of the sign-changing criterion.

    Runs :func:`check_thm_4_1` on the reversed problem and maps labels and the
    witness time back.  The reversal also checks the β̃ bounds on
    R̃_Γ + d̃_0, which the corollary's own list leaves out.
    """
    if not ps.finite_horizon:
        raise PreconditionError("τ0 < ∞ required")
    env = EnvelopeSet.coerce(env, ps)
    Gamma = ps.Gamma if Gamma is None else Gamma
    if Gamma is None or not Gamma > 0:
        raise PreconditionError("Gamma > 0 required")
    g = make_grid(ps, grid)
    require_quad(env, g.times)
    rev, lam = reversed_problem(ps)
    renv = _reflect_envelopes(env, lam)
    rgrid = np.sort(lam - g.times)
    inner = check_thm_4_1(rev, renv, Gamma, grid=rgrid)
    witness = None if inner.witness_t is None else lam - inner.witness_t
    return Verdict(
        criterion="cor41",
        holds=inner.holds,
        witness_t=witness,
        violated=_COR_LABELS.get(inner.violated, inner.violated),
        margin=inner.margin,
        grid=g.description + " (checked on the reversed problem)",
        borderline=inner.borderline,
        violations=tuple(_COR_LABELS.get(v, v) for v in inner.violations),
        params={"env": env, "Gamma": float(Gamma), "reversed": rev, "lambda0": lam,
                "reversed_env": renv, "reversed_verdict": inner},
    )


CHECKERS = {
    "thm31": check_thm_3_1,
    "thm32": check_thm_3_2,
    "thm33": check_thm_3_3,
    "thm34": check_thm_3_4,
    "thm35": check_thm_3_5,
    "thm41": check_thm_4_1,
    "cor41": check_cor_4_1,
}
