"""Non-conjugation harness for the linear system behind the Riccati equation.

With ``Psi = Y Phi`` the Riccati equation for ``Y`` is equivalent to

    phi' = C phi + A psi,    psi' = -D phi - B psi,

where A, B, C, D are the symbols of a, b, c, d.  A pair (phi, psi) with both
components nonzero for all t is completely non-conjugate.  ``run_nonconj``
integrates the system from ``psi(t0) = symbol(gamma) phi(t0)`` and reports the
smallest norms reached; ``liouville_check`` compares ``det Phi`` of the
associated fundamental matrix with the exponential of its trace integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coeffexpr.config import ProblemSpec
from .criteria.checkers import check_thm_3_1, check_thm_3_2
from .criteria.verdict import report_lines
from .criteria.verify import integrate_problem
from .errors import IntegrationError, PreconditionError
from .integrator import NumericPolicy, Trajectory, detect_sign_crossings, integrate_ivp
from .model.coefficients import CoefficientEvaluator, LinearSystemRHS
from .model.quadrature import CumulativeIntegral
from .quatcore import state_symbol, symbol_array

#: A norm below this is reported as a counterexample to non-conjugation.
NONZERO_TOL = 1e-8
MODES = ("thm31", "thm32")

# The linear system has no finite escape; only overflow should stop it.
_LINEAR_BLOWUP = 1e300


@dataclass(frozen=True)
class NonconjInput:
    ps: ProblemSpec
    phi0: tuple[float, float, float, float]
    gammas: tuple[float, float, float, float]
    T: float
    mode: str = "thm31"

    def __post_init__(self):
        phi0 = np.asarray(self.phi0, dtype=float)
        if phi0.shape != (4,) or not np.all(np.isfinite(phi0)):
            raise PreconditionError("phi(t0) must be a finite 4-vector")
        if not np.any(phi0 != 0.0):
            raise PreconditionError("phi(t0) must be nonzero")
        g = np.asarray(self.gammas, dtype=float)
        if g.shape != (4,) or not np.all(np.isfinite(g)):
            raise PreconditionError("gammas must be four finite reals")
        if not (self.T > self.ps.t0 and math.isfinite(self.T)):
            raise PreconditionError("finite window end T > t0 required")
        if self.mode not in MODES:
            raise PreconditionError(f"mode must be one of {', '.join(MODES)}")
        if self.mode == "thm31":
            S = self.ps.S_set if self.ps.S_set is not None else (0, 1, 2, 3)
            if any(g[n] < 0 for n in S):
                raise PreconditionError("gamma_n >= 0 on S required")
            if sum(g[n] for n in S) == 0:
                raise PreconditionError("sum of gamma_n over S must be nonzero")
        elif not np.all(g > 0):
            raise PreconditionError("gamma_n > 0 for all n required")

    def psi0(self) -> np.ndarray:
        """``(g0 E - g1 I - g2 J - g3 K) phi0``: the symbol of the initial state."""
        return state_symbol(self.gammas) @ np.asarray(self.phi0, dtype=float)


@dataclass(frozen=True)
class NonconjReport:
    min_phi_norm: float
    t_min_phi: float
    min_psi_norm: float
    t_min_psi: float
    liouville_residual: float
    min_det: float
    drift: float
    status: str
    counterexample: bool
    mode: str
    trajectory: Trajectory | None = None

    @property
    def ok(self) -> bool:
        return not self.counterexample and self.min_det > 0

    def report(self) -> list[str]:
        return report_lines([
            ("mode", self.mode),
            ("status", self.status),
            ("nonconjugate", self.ok),
            ("min_phi_norm", self.min_phi_norm),
            ("t_min_phi", self.t_min_phi),
            ("min_psi_norm", self.min_psi_norm),
            ("t_min_psi", self.t_min_psi),
            ("liouville_residual", self.liouville_residual),
            ("min_det", self.min_det),
            ("drift", self.drift),
            ("counterexample", self.counterexample),
        ])

    def to_report(self) -> str:
        return "\n".join(self.report()) + "\n"


def _linear_policy(policy: NumericPolicy) -> NumericPolicy:
    return policy.replace(blowup_norm=max(policy.blowup_norm, _LINEAR_BLOWUP))


def _sample_times(traj: Trajectory, components) -> np.ndarray:
    t = traj.times
    ts = [t, 0.5 * (t[:-1] + t[1:])]
    for k in components:
        ts.append(np.asarray(detect_sign_crossings(traj, k), dtype=float))
    return np.unique(np.concatenate(ts))


def _min_norm(traj: Trajectory, components) -> tuple[float, float]:
    ts = _sample_times(traj, components)
    norms = np.linalg.norm(traj.dense(ts)[:, components], axis=1)
    i = int(np.argmin(norms))
    return float(norms[i]), float(ts[i])


def run_nonconj(inp: NonconjInput, policy: NumericPolicy | None = None, recheck: bool = False) -> NonconjReport:
    ps = inp.ps
    policy = policy or NumericPolicy.from_spec(ps)
    if recheck:
        verdict = check_thm_3_1(ps) if inp.mode == "thm31" else check_thm_3_2(ps)
        if not verdict.holds:
            raise PreconditionError(f"{verdict.criterion} does not hold ({verdict.violated})")
    sys = LinearSystemRHS(ps, 1)
    y0 = sys.pack(np.asarray(inp.phi0, dtype=float), inp.psi0())
    traj = integrate_ivp(sys.flat, y0, ps.t0, inp.T, _linear_policy(policy))
    if not traj.completed:
        raise IntegrationError(f"linear system stopped at t={traj.t_last!r} ({traj.status})")

    min_phi, t_phi = _min_norm(traj, [0, 1, 2, 3])
    min_psi, t_psi = _min_norm(traj, [4, 5, 6, 7])

    # |psi - Y phi| / max(1, |psi|) along the overlap with the Riccati solution
    q = integrate_problem(ps, policy, inp.gammas, inp.T)
    ts = traj.times[traj.times <= q.t_last]
    lin = traj.dense(ts)
    qs = q.dense(ts)
    drift = max(float(np.linalg.norm(lin[i, 4:] - state_symbol(qs[i]) @ lin[i, :4])
                      / max(1.0, np.linalg.norm(lin[i, 4:])))
                for i in range(len(ts)))

    if q.completed:
        residual, min_det = _liouville(ps, q, policy)
    else:
        residual, min_det = math.nan, math.nan
    counter = min(min_phi, min_psi) < NONZERO_TOL
    return NonconjReport(min_phi, t_phi, min_psi, t_psi, residual, min_det, drift, traj.status,
                         counter, inp.mode, traj)


def _liouville(ps: ProblemSpec, q_traj: Trajectory, policy: NumericPolicy) -> tuple[float, float]:
    if not q_traj.completed:
        raise PreconditionError("Liouville check needs a completed trajectory")
    ev = CoefficientEvaluator(ps)
    t0, t1 = q_traj.t0, q_traj.t_last

    def gen(t):
        co = ev(t)
        return symbol_array(co[0]) @ state_symbol(q_traj.dense(t)) + symbol_array(co[2])

    def rhs(t, y):
        return (gen(t) @ y.reshape(4, 4)).reshape(-1)

    fund = integrate_ivp(rhs, np.eye(4).reshape(-1), t0, t1, _linear_policy(policy))
    if not fund.completed:
        raise IntegrationError(f"fundamental matrix stopped at t={fund.t_last!r}")
    trace = CumulativeIntegral(lambda t: float(np.trace(gen(t))), t0, t1,
                               policy.quad_atol, policy.quad_rtol, policy.quad_max_depth)
    ts = np.unique(np.concatenate([fund.times, np.linspace(t0, t1, 201)]))
    dets = np.linalg.det(fund.dense(ts).reshape(-1, 4, 4))
    expected = np.exp(trace(ts))
    residual = float(np.max(np.abs(dets - expected) / np.maximum(1.0, expected)))
    return residual, float(np.min(dets))


def liouville_check(ps: ProblemSpec, q_traj: Trajectory, policy: NumericPolicy | None = None) -> float:
    """Relative gap between ``det Phi`` and ``exp(int tr(A Y1 + C))``."""
    return _liouville(ps, q_traj, policy or NumericPolicy.from_spec(ps))[0]
