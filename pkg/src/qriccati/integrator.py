"""Dormand-Prince 5(4) initial-value solver with blow-up detection.

Trajectories carry a piecewise cubic Hermite dense output built from the
accepted nodes and the (first-same-as-last) derivatives there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import IntegrationError, PreconditionError

COMPLETED = "completed"
ESCAPED = "escaped"
STEP_COLLAPSE = "step_collapse"

# Dormand-Prince tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
# fifth-order minus embedded fourth-order weights
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

# continuous extension of the tableau; only used to measure, at each step's
# midpoint, how far the cubic Hermite dense output is from a 4th-order value
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])
_MID_WEIGHTS = _P @ np.array([0.5, 0.25, 0.125, 0.0625])

_SAFETY = 0.9
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5
_FAC_MIN, _FAC_MAX = 0.2, 5.0


@dataclass(frozen=True)
class NumericPolicy:
    """Tolerances and limits shared by integration and quadrature.

    ``min_step`` of None means ``1e-12 * (t_end - t0)``.
    """

    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = math.inf
    min_step: float | None = None
    blowup_norm: float = 1e8
    max_steps: int = 10_000_000
    quad_atol: float = 1e-10
    quad_rtol: float = 1e-10
    quad_max_depth: int = 40

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise PreconditionError("rtol, atol > 0 required")
        if not self.blowup_norm > 0:
            raise PreconditionError("blowup_norm > 0 required")
        if not self.max_step > 0:
            raise PreconditionError("max_step > 0 required")
        if self.min_step is not None and not (0 < self.min_step < self.max_step):
            raise PreconditionError("0 < min_step < max_step required")
        if self.max_steps < 1:
            raise PreconditionError("max_steps >= 1 required")

    @classmethod
    def from_spec(cls, ps, **overrides) -> NumericPolicy:
        """Policy from the ``[numeric]`` keys of a ProblemSpec, then ``overrides``."""
        values = dict(ps.numeric)
        values.update(overrides)
        return cls(**values)

    def replace(self, **changes) -> NumericPolicy:
        from dataclasses import replace
        return replace(self, **changes)


def _hermite(t, t0, t1, y0, y1, f0, f1):
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


@dataclass(frozen=True)
class Trajectory:
    """Accepted nodes, derivatives there, and how the integration ended.

    ``status`` is ``completed``, ``escaped`` or ``step_collapse``;
    ``t_status`` is the escape-time estimate or the collapse time.
    """

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    status: str = COMPLETED
    t_status: float | None = None
    t_end_requested: float | None = None
    nfev: int = 0
    rejected: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.times, self.states, self.derivs):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_last(self) -> float:
        return float(self.times[-1])

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED

    @property
    def escaped(self) -> bool:
        return self.status == ESCAPED

    @property
    def t_escape(self) -> float | None:
        return self.t_status if self.status == ESCAPED else None

    def dense(self, t):
        """State(s) at time(s) ``t`` inside ``[times[0], times[-1]]``."""
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        x = self.times
        lo, hi = x[0], x[-1]
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(tt < lo - slack) or np.any(tt > hi + slack):
            raise PreconditionError(f"dense output requested outside [{lo!r}, {hi!r}]")
        if len(x) == 1:
            out = np.repeat(self.states[:1], len(tt), axis=0)
        else:
            i = np.clip(np.searchsorted(x, tt, side="right") - 1, 0, len(x) - 2)
            col = (slice(None), None)
            out = _hermite(tt[col], x[i][col], x[i + 1][col], self.states[i], self.states[i + 1],
                           self.derivs[i], self.derivs[i + 1])
            # exact at nodes
            exact = np.searchsorted(x, tt)
            exact = np.clip(exact, 0, len(x) - 1)
            hit = x[exact] == tt
            out[hit] = self.states[exact[hit]]
        return out[0] if scalar else out

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``n`` evenly spaced times over the recorded span and the states there."""
        ts = np.linspace(self.t0, self.t_last, n)
        return ts, self.dense(ts)


def _norm_rms(v, scale):
    return math.sqrt(float(np.mean((v / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, rtol, atol, h_max):
    scale = atol + rtol * np.abs(y0)
    d0 = _norm_rms(y0, scale)
    d1 = _norm_rms(f0, scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, h_max)
    f1 = np.asarray(rhs(t0 + h0, y0 + h0 * f0), dtype=float)
    if not np.all(np.isfinite(f1)):
        return h0 * 1e-3
    d2 = _norm_rms(f1 - f0, scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, h_max)


def integrate_ivp(rhs: Callable, y0, t0: float, t_end: float, policy: NumericPolicy | None = None) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``(t0, y0)`` towards ``t_end``.

    A step is accepted when both the embedded error estimate and the
    deviation of the cubic Hermite dense output at the step midpoint from the
    method's continuous extension are within ``atol + rtol |y|``.

    Stops early with status ``escaped`` once ``max|y| >= blowup_norm`` (the
    escape time is refined by bisection on the dense output of the last step)
    or ``step_collapse`` when the controller asks for a step below
    ``min_step``.  Steps whose stages produce non-finite values are rejected.
    """
    policy = policy or NumericPolicy()
    if not t_end > t0:
        raise PreconditionError("t_end > t0 required")
    if not math.isfinite(t_end):
        raise PreconditionError("integration needs a finite end time")
    rtol, atol = policy.rtol, policy.atol
    span = t_end - t0
    h_max = min(policy.max_step, span)
    h_min = policy.min_step if policy.min_step is not None else 1e-12 * span
    y = np.array(y0, dtype=float).reshape(-1)
    f = np.asarray(rhs(t0, y), dtype=float).reshape(-1)
    nfev = 1
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(f))):
        raise PreconditionError("rhs must be finite at (t0, y0)")
    times, states, derivs = [float(t0)], [y.copy()], [f.copy()]
    t = float(t0)
    status, t_status = COMPLETED, None
    if np.max(np.abs(y)) >= policy.blowup_norm:
        return Trajectory(np.array(times), np.array(states), np.array(derivs), ESCAPED, t, t_end, nfev)
    h = _initial_step(rhs, t, y, f, rtol, atol, h_max)
    nfev += 1
    err_prev = 1.0
    rejected = 0
    steps = 0
    k = [None] * 7
    while t < t_end:
        steps += 1
        if steps > policy.max_steps:
            raise IntegrationError(f"max_steps ({policy.max_steps}) exceeded at t={t!r}")
        last = False
        if t + h >= t_end or t_end - (t + h) < h_min:
            h = t_end - t
            last = True
        k[0] = f
        finite = True
        for s in range(1, 7):
            ys = y + h * sum(a * k[j] for j, a in enumerate(_A[s]) if a)
            k[s] = np.asarray(rhs(t + _C[s] * h, ys), dtype=float).reshape(-1)
            nfev += 1
            if not np.all(np.isfinite(k[s])):
                finite = False
                break
        if finite:
            y_new = y + h * sum(b * k[j] for j, b in enumerate(_B) if b)
            err_vec = h * sum(e * k[j] for j, e in enumerate(_E) if e)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(err_vec) / scale))
            if math.isfinite(err):
                y_mid = y + h * sum(w * k[j] for j, w in enumerate(_MID_WEIGHTS) if w)
                h_mid = 0.5 * (y + y_new) + 0.125 * h * (f - k[6])
                err = max(err, float(np.max(np.abs(h_mid - y_mid) / scale)))
            finite = math.isfinite(err) and bool(np.all(np.isfinite(y_new)))
        if not finite:
            rejected += 1
            h *= 0.25
            if h < h_min:
                status, t_status = STEP_COLLAPSE, t
                break
            continue
        if err <= 1.0:
            t_new = t_end if last else t + h
            f_new = k[6]
            times.append(t_new)
            states.append(y_new)
            derivs.append(f_new)
            if np.max(np.abs(y_new)) >= policy.blowup_norm:
                status = ESCAPED
                t_status = _refine_escape(t, t_new, y, y_new, f, f_new, policy.blowup_norm)
                break
            t, y, f = t_new, y_new, f_new
            fac = _SAFETY * max(err, 1e-10) ** (-_ALPHA) * err_prev ** _BETA
            h = h * min(_FAC_MAX, max(_FAC_MIN, fac))
            h = min(h, h_max)
            err_prev = max(err, 1e-4)
        else:
            rejected += 1
            fac = _SAFETY * err ** (-1 / 5)
            h = h * min(1.0, max(_FAC_MIN, fac))
        if t < t_end and h < h_min:
            status, t_status = STEP_COLLAPSE, t
            break
    return Trajectory(np.array(times), np.array(states), np.array(derivs), status, t_status, t_end,
                      nfev, rejected)


def _refine_escape(t0, t1, y0, y1, f0, f1, threshold):
    """Bisect the Hermite interpolant of the last step for max|y| = threshold."""
    lo, hi = t0, t1
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if np.max(np.abs(_hermite(mid, t0, t1, y0, y1, f0, f1))) >= threshold:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * max(1.0, abs(hi)):
            break
    return hi


def _cubic_pieces(traj: Trajectory, component: int):
    """Yield (t, value) breakpoints splitting the dense output into monotone pieces."""
    x = traj.times
    y = traj.states[:, component]
    d = traj.derivs[:, component]
    yield float(x[0]), float(y[0])
    for i in range(len(x) - 1):
        h = x[i + 1] - x[i]
        # dense derivative in s in [0, 1]: quadratic A s^2 + B s + C
        p0, p1, m0, m1 = y[i], y[i + 1], h * d[i], h * d[i + 1]
        A = 6 * p0 + 3 * m0 - 6 * p1 + 3 * m1
        B = -6 * p0 - 4 * m0 + 6 * p1 - 2 * m1
        C = m0
        roots = []
        if abs(A) > 1e-300:
            disc = B * B - 4 * A * C
            if disc >= 0:
                sq = math.sqrt(disc)
                roots = [(-B - sq) / (2 * A), (-B + sq) / (2 * A)]
        elif abs(B) > 1e-300:
            roots = [-C / B]
        for s in sorted(r for r in roots if 0 < r < 1):
            tc = x[i] + s * h
            yield float(tc), float(traj.dense(tc)[component])
        yield float(x[i + 1]), float(y[i + 1])


def detect_sign_crossings(traj: Trajectory, component: int, tol: float = 1e-10) -> list[float]:
    """Times where the dense interpolant of ``component`` changes sign."""
    if not 0 <= component < traj.dim:
        raise PreconditionError(f"component {component} out of range for dimension {traj.dim}")
    out: list[float] = []
    last_sign = 0
    first_zero = None
    prev_t = None
    for t, v in _cubic_pieces(traj, component):
        sign = (v > 0) - (v < 0)
        if sign == 0:
            if first_zero is None:
                first_zero = t
        else:
            if last_sign and sign != last_sign:
                if first_zero is not None:
                    out.append(first_zero)
                else:
                    out.append(_bisect(traj, component, prev_t, t, last_sign, tol))
            last_sign = sign
            first_zero = None
        prev_t = t
    return out


def _bisect(traj, component, lo, hi, sign_lo, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v = float(traj.dense(mid)[component])
        if v == 0:
            return mid
        if (v > 0) - (v < 0) == sign_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def f0_diagnostic(ps, traj: Trajectory) -> tuple[np.ndarray, float]:
    """Cumulative ``int_t0^t sum_n a_n q_n`` at the trajectory nodes and its minimum.

    The integrand is the trace sum along a trajectory of the real system;
    each step is integrated by Simpson's rule on the dense output.
    """
    from .model.coefficients import CoefficientEvaluator

    if traj.dim != 4:
        raise PreconditionError("f0 diagnostic needs a four-component trajectory")
    ev = CoefficientEvaluator(ps)
    x = traj.times

    def integrand(ts, qs):
        a = ev.on_grid(ts)[0]
        return np.sum(a * qs.T, axis=0)

    g_nodes = integrand(x, traj.states)
    if len(x) == 1:
        return np.zeros(1), 0.0
    mids = 0.5 * (x[:-1] + x[1:])
    g_mid = integrand(mids, traj.dense(mids))
    pieces = (x[1:] - x[:-1]) * (g_nodes[:-1] + 4 * g_mid + g_nodes[1:]) / 6.0
    values = np.concatenate([[0.0], np.cumsum(pieces)])
    return values, float(np.min(values))
