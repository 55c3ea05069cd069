"""Numerical verification of the conclusions a passing verdict declares."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..coeffexpr.config import ProblemSpec
from ..errors import PreconditionError
from ..integrator import COMPLETED, NumericPolicy, Trajectory, integrate_ivp
from ..model.coefficients import real_rhs
from ..model.quadrature import as_function
from .envelopes import gamma_data
from .verdict import TOL_VERIFY, Verdict, report_lines


def integrate_problem(ps: ProblemSpec, policy: NumericPolicy | None = None, gamma=None,
                      t_end: float | None = None) -> Trajectory:
    """Integrate the real four-component system from ``(t0, gamma)``."""
    policy = policy or NumericPolicy.from_spec(ps)
    gamma = ps.gamma if gamma is None else gamma
    t_end = ps.horizon if t_end is None else t_end
    if not math.isfinite(t_end):
        raise PreconditionError("a finite window end is required for integration")
    return integrate_ivp(real_rhs(ps), np.asarray(gamma, dtype=float), ps.t0, t_end, policy)


def terminal_value_solve(ps: ProblemSpec, gamma=None, policy: NumericPolicy | None = None) -> Trajectory:
    """Solution on [t0, τ0] with ``q(τ0) = gamma``, via ``q(t) = u(λ0 - t)``.

    The reversed problem is integrated forward from t0; the returned
    trajectory is expressed in the original time (increasing).
    """
    from .checkers import reversed_problem

    rev, lam = reversed_problem(ps)
    u = integrate_problem(rev, policy or NumericPolicy.from_spec(ps), gamma)
    times = lam - u.times[::-1]
    # lam - t carries roundoff; pin the exact window ends
    times[-1] = ps.horizon
    if u.completed:
        times[0] = ps.t0
    t_status = None if u.t_status is None else lam - u.t_status
    return Trajectory(np.ascontiguousarray(times), np.ascontiguousarray(u.states[::-1]),
                      np.ascontiguousarray(-u.derivs[::-1]), u.status, t_status, ps.t0,
                      u.nfev, u.rejected, {"reversed": True, "lambda0": lam})


@dataclass(frozen=True)
class Assertion:
    name: str
    ok: bool
    margin: float
    witness_t: float | None


@dataclass(frozen=True)
class VerificationReport:
    criterion: str
    verified: bool
    status: str
    t_escape: float | None
    window_end: float
    assertions: tuple[Assertion, ...]
    trajectory: Trajectory | None = None

    def margin(self, name: str) -> float:
        for a in self.assertions:
            if a.name == name:
                return a.margin
        raise KeyError(name)

    @property
    def min_margin(self) -> float:
        vals = [a.margin for a in self.assertions if math.isfinite(a.margin)]
        return min(vals) if vals else math.inf

    def report(self) -> list[str]:
        pairs = [
            ("criterion", self.criterion),
            ("verified", self.verified),
            ("status", self.status),
            ("t_escape", self.t_escape),
            ("window_end", self.window_end),
        ]
        for a in self.assertions:
            pairs += [(f"ok.{a.name}", a.ok), (f"margin.{a.name}", a.margin), (f"witness.{a.name}", a.witness_t)]
        return report_lines(pairs)

    def to_report(self) -> str:
        return "\n".join(self.report()) + "\n"


def _samples(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    t = traj.times
    if len(t) < 2:
        return t, traj.states
    mids = 0.5 * (t[:-1] + t[1:])
    ts = np.empty(2 * len(t) - 1)
    ts[0::2] = t
    ts[1::2] = mids
    ys = np.empty((len(ts), traj.dim))
    ys[0::2] = traj.states
    ys[1::2] = traj.dense(mids)
    return ts, ys


def _lower(name, ts, values, tol=TOL_VERIFY, strict=False) -> Assertion:
    i = int(np.argmin(values))
    m = float(values[i])
    ok = m > 0 if strict else m >= -tol
    return Assertion(name, ok, m, float(ts[i]))


def _check_init(cond: bool, message: str):
    if not cond:
        raise PreconditionError(f"initial data outside the criterion's range: {message}")


def verify_conclusion(ps: ProblemSpec, verdict: Verdict, init=None, policy: NumericPolicy | None = None,
                      tol: float = TOL_VERIFY) -> VerificationReport:
    """Integrate and test the bounds that ``verdict`` promises.

    The window is [t0, horizon] of ``ps``.  Escape or step collapse is
    reported as the failed assertion ``completed``; bound violations as the
    failed bound with its witness time.
    """
    if not verdict.holds:
        raise PreconditionError("verification needs a verdict that holds")
    gamma = np.asarray(ps.gamma if init is None else init, dtype=float)
    if gamma.shape != (4,):
        raise PreconditionError("initial data must have four components")
    policy = policy or NumericPolicy.from_spec(ps)
    crit = verdict.criterion
    pending = []  # (name, function of (ts, ys) -> margins, strict)

    if crit == "thm31":
        S = verdict.params["S"]
        _check_init(all(gamma[n] >= 0 for n in S), "γ_n ≥ 0 on S")
        for n in S:
            pending.append((f"q{n}_nonneg", lambda ts, ys, n=n: ys[:, n], False))
            if gamma[n] > 0:
                pending.append((f"q{n}_positive", lambda ts, ys, n=n: ys[:, n], True))
    elif crit == "thm32":
        _check_init(bool(np.all(gamma > 0)), "γ_n > 0 for all n")
        for n in range(4):
            pending.append((f"q{n}_positive", lambda ts, ys, n=n: ys[:, n], True))
    elif crit == "thm33":
        _check_init(gamma[0] >= 0, "γ_0 ≥ 0")
        pending.append(("q0_nonneg", lambda ts, ys: ys[:, 0], False))
    elif crit in ("thm34", "thm35"):
        env = verdict.params["env"]
        sign = -1.0 if crit == "thm34" else 1.0
        bound0 = sign * math.sqrt(env.values("beta", ps.t0) / env.values("alpha", ps.t0))
        _check_init(gamma[0] >= bound0 - 1e-12, f"γ_0 ≥ {bound0:.17g}")

        def env_margin(ts, ys, env=env, sign=sign):
            return ys[:, 0] - sign * np.sqrt(env.values("beta", ts) / env.values("alpha", ts))

        pending.append(("q0_envelope", env_margin, False))
    elif crit == "thm41":
        env, Gamma = verdict.params["env"], verdict.params["Gamma"]
        gd = verdict.params["gamma_data"]
        lo = -math.sqrt(env.values("beta2", ps.t0) / env.values("alpha2", ps.t0))
        hi = math.sqrt(env.values("beta1", ps.t0) / env.values("alpha1", ps.t0))
        _check_init(lo - 1e-12 <= gamma[0] <= hi + 1e-12, f"γ_0 ∈ [{lo:.17g}, {hi:.17g}]")
        gv = float(np.linalg.norm(gamma[1:]))
        _check_init(gv <= Gamma + 1e-12, "‖(γ_1, γ_2, γ_3)‖ ≤ Γ")
        pending += _interval_assertions(env, "beta2", "alpha2", "beta1", "alpha1")
        pending.append(("vec_bound", lambda ts, ys: gv + gd.M_of_t(ts) - np.linalg.norm(ys[:, 1:], axis=1), False))
    elif crit == "cor41":
        env, Gamma = verdict.params["env"], verdict.params["Gamma"]
        tau0 = ps.horizon
        lo = -math.sqrt(env.values("beta1", tau0) / env.values("alpha1", tau0))
        hi = math.sqrt(env.values("beta2", tau0) / env.values("alpha2", tau0))
        _check_init(lo - 1e-12 <= gamma[0] <= hi + 1e-12, f"γ_0 ∈ [{lo:.17g}, {hi:.17g}]")
        gv = float(np.linalg.norm(gamma[1:]))
        _check_init(gv <= Gamma + 1e-12, "‖(γ_1, γ_2, γ_3)‖ ≤ Γ")
        gd = gamma_data(ps, Gamma, "reversed")
        pending += _interval_assertions(env, "beta1", "alpha1", "beta2", "alpha2")
        pending.append(("vec_bound", lambda ts, ys: gv + gd.M_star_of_t(ts) - np.linalg.norm(ys[:, 1:], axis=1), False))
    else:
        raise PreconditionError(f"unknown criterion {crit!r}")

    traj = terminal_value_solve(ps, gamma, policy) if crit == "cor41" else integrate_problem(ps, policy, gamma)
    ts, ys = _samples(traj)
    assertions = [Assertion("completed", traj.status == COMPLETED, 0.0 if traj.completed else -math.inf,
                            None if traj.completed else traj.t_status)]
    for name, fn, strict in pending:
        assertions.append(_lower(name, ts, np.asarray(fn(ts, ys), dtype=float), tol, strict))
    return VerificationReport(
        criterion=crit,
        verified=all(a.ok for a in assertions),
        status=traj.status,
        t_escape=traj.t_escape,
        window_end=float(ps.horizon),
        assertions=tuple(assertions),
        trajectory=traj,
    )


def _interval_assertions(env, b_lo, a_lo, b_hi, a_hi):
    """-sqrt(b_lo/a_lo) <= q0 <= sqrt(b_hi/a_hi) as two lower-bound margins."""
    def lower(ts, ys):
        return ys[:, 0] + np.sqrt(env.values(b_lo, ts) / env.values(a_lo, ts))

    def upper(ts, ys):
        return np.sqrt(env.values(b_hi, ts) / env.values(a_hi, ts)) - ys[:, 0]

    return [("q0_lower", lower, False), ("q0_upper", upper, False)]


def compare_scalar_riccati(f, g, h, f1, g1, h1, y1_0: float, gamma0: float, window,
                           policy: NumericPolicy | None = None, grid_points: int = 2049) -> bool:
    """Ordering of scalar Riccati solutions (test oracle).

    Integrates ``y' + f y^2 + g y + h = 0`` from ``gamma0`` and the same with
    ``f1, g1, h1`` from ``y1_0``; true iff ``y0 >= y1 - 1e-7`` wherever both
    exist.  Requires, on a grid: f >= 0, f1 = f, g1 = g, h1 >= h, and
    ``gamma0 >= y1_0``.
    """
    t0, t1 = (float(x) for x in window)
    if not t1 > t0:
        raise PreconditionError("window end must exceed its start")
    fs = [as_function(x) for x in (f, g, h, f1, g1, h1)]
    ts = np.linspace(t0, t1, grid_points)
    vals = np.array([[fn(t) for t in ts] for fn in fs])
    if gamma0 < y1_0:
        raise PreconditionError("gamma0 >= y1(t0) required")
    if np.any(vals[0] < -1e-12):
        raise PreconditionError("f >= 0 required")
    if np.any(np.abs(vals[3] - vals[0]) > 1e-12) or np.any(np.abs(vals[4] - vals[1]) > 1e-12):
        raise PreconditionError("f1 = f and g1 = g required")
    if np.any(vals[5] < vals[2] - 1e-12):
        raise PreconditionError("h1 >= h required")
    ff, gf, hf, f1f, g1f, h1f = fs
    policy = policy or NumericPolicy()

    def rhs0(t, y):
        return np.array([-(ff(t) * y[0] * y[0] + gf(t) * y[0] + hf(t))])

    def rhs1(t, y):
        return np.array([-(f1f(t) * y[0] * y[0] + g1f(t) * y[0] + h1f(t))])

    y0 = integrate_ivp(rhs0, [gamma0], t0, t1, policy)
    y1 = integrate_ivp(rhs1, [y1_0], t0, t1, policy)
    end = min(y0.t_last, y1.t_last)
    pts = np.unique(np.concatenate([y0.times[y0.times <= end], y1.times[y1.times <= end]]))
    diff = y0.dense(pts)[:, 0] - y1.dense(pts)[:, 0]
    return bool(np.all(diff >= -1e-7))
