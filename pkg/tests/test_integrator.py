import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from qriccati.coeffexpr.config import problem_from_strings
from qriccati.criteria import integrate_problem
from qriccati.errors import IntegrationError, PreconditionError
from qriccati.integrator import (
    COMPLETED, ESCAPED, STEP_COLLAPSE, NumericPolicy, Trajectory, detect_sign_crossings, f0_diagnostic,
    integrate_ivp,
)

# y' = -(1 + y^2) leaves through the blow-up threshold where -tan t = -blowup_norm
ESCAPE_T = math.atan(1e8)


def decay(t, y):
    return -y * y


def escape(t, y):
    return -(1 + y * y)


def tilted(t, y):
    return np.array([-y[1], y[0]]) - 0.1 * y


def tilted_exact(t):
    return math.exp(-0.1 * t) * np.array([math.cos(t), math.sin(t)])


def test_closed_form_decay():
    traj = integrate_ivp(decay, [1.0], 0.0, 10.0)
    assert traj.status == COMPLETED
    assert abs(traj.states[-1, 0] - 1 / 11) <= 1e-8 / 11
    assert traj.t_last == 10.0 and traj.t0 == 0.0


def test_constant_solution():
    traj = integrate_ivp(lambda t, y: np.zeros(3), [1.0, -2.0, 3.0], 0.0, 5.0)
    assert traj.completed and np.array_equal(traj.states[-1], [1.0, -2.0, 3.0])


def test_escape_detection():
    traj = integrate_ivp(escape, [0.0], 0.0, 3.0)
    assert traj.status == ESCAPED and traj.escaped
    assert abs(traj.t_escape - math.pi / 2) <= 1e-3
    assert np.linalg.norm(traj.states[-1]) >= 1e8


def _errors(policy):
    e1 = abs(integrate_ivp(decay, [1.0], 0.0, 10.0, policy).states[-1, 0] - 1 / 11)
    e2 = abs(integrate_ivp(escape, [0.0], 0.0, 3.0, policy).t_escape - ESCAPE_T)
    e3 = np.abs(integrate_ivp(tilted, [1.0, 0.0], 0.0, 10.0, policy).states[-1] - tilted_exact(10.0)).max()
    return np.array([e1, e2, e3])


def test_order_check():
    loose = _errors(NumericPolicy(rtol=1e-6, atol=1e-8))
    tight = _errors(NumericPolicy(rtol=1e-8, atol=1e-10))
    assert np.all(tight * 10 <= loose), (loose, tight)


def test_against_scipy():
    ref = solve_ivp(tilted, (0, 10), [1.0, 0.0], method="DOP853", rtol=1e-13, atol=1e-14, dense_output=True)
    traj = integrate_ivp(tilted, [1.0, 0.0], 0.0, 10.0)
    ts = np.linspace(0, 10, 57)
    assert np.abs(traj.dense(ts) - ref.sol(ts).T).max() <= 1e-7


def test_dense_output_consistency():
    pol = NumericPolicy()
    traj = integrate_ivp(tilted, [1.0, 0.0], 0.0, 10.0, pol)
    fine = integrate_ivp(tilted, [1.0, 0.0], 0.0, 10.0, NumericPolicy(rtol=1e-10, atol=1e-12))
    mids = 0.5 * (traj.times[:-1] + traj.times[1:])
    err = np.abs(traj.dense(mids) - fine.dense(mids)).max(axis=1)
    bound = 10 * (pol.atol + pol.rtol * np.abs(traj.dense(mids)).max(axis=1))
    assert np.all(err <= bound)


def test_dense_exact_at_nodes_and_bounds():
    traj = integrate_ivp(tilted, [1.0, 0.0], 0.0, 3.0)
    assert np.array_equal(traj.dense(traj.times), traj.states)
    assert np.all(np.diff(traj.times) > 0)
    with pytest.raises(PreconditionError):
        traj.dense(3.5)
    ts, ys = traj.sample(5)
    assert ts[0] == 0.0 and ts[-1] == 3.0 and ys.shape == (5, 2)


def test_determinism():
    a = integrate_ivp(tilted, [1.0, 0.0], 0.0, 10.0)
    b = integrate_ivp(tilted, [1.0, 0.0], 0.0, 10.0)
    assert a.times.tobytes() == b.times.tobytes() and a.states.tobytes() == b.states.tobytes()


def test_preconditions_and_limits():
    with pytest.raises(PreconditionError):
        integrate_ivp(decay, [1.0], 1.0, 1.0)
    with pytest.raises(PreconditionError):
        integrate_ivp(decay, [1.0], 0.0, math.inf)
    with pytest.raises(IntegrationError):
        integrate_ivp(tilted, [1.0, 0.0], 0.0, 100.0, NumericPolicy(max_steps=10))
    with pytest.raises(PreconditionError):
        NumericPolicy(rtol=0.0)
    with pytest.raises(PreconditionError):
        NumericPolicy(min_step=1.0, max_step=0.5)


def test_step_collapse():
    # y = -cos(1/(1 - t)) oscillates infinitely fast at t = 1 while staying bounded
    rhs = lambda t, y: [math.sin(1 / (1 - t)) / (1 - t) ** 2]  # noqa: E731
    traj = integrate_ivp(rhs, [-math.cos(1.0)], 0.0, 2.0, NumericPolicy(min_step=1e-3))
    assert traj.status == STEP_COLLAPSE and traj.t_status < 1.0 and not traj.completed


def test_policy_from_spec():
    ps = problem_from_strings(horizon=1.0, numeric={"rtol": 1e-6, "blowup_norm": 1e4})
    pol = NumericPolicy.from_spec(ps, atol=1e-9)
    assert (pol.rtol, pol.atol, pol.blowup_norm) == (1e-6, 1e-9, 1e4)


# -- sign crossings ---------------------------------------------------------

def _exact_trajectory(f, df, a, b, n):
    ts = np.linspace(a, b, n)
    return Trajectory(ts, f(ts)[:, None], df(ts)[:, None])


def test_no_crossings_for_constant():
    traj = integrate_ivp(lambda t, y: [0.0], [1.0], 0.0, 4.0)
    assert detect_sign_crossings(traj, 0) == []


def test_linear_crossing():
    traj = integrate_ivp(lambda t, y: [-1.0], [1.0], 0.0, 2.0)
    roots = detect_sign_crossings(traj, 0)
    assert len(roots) == 1 and abs(roots[0] - 1.0) <= 1e-9


def test_sine_crossings_exact_samples():
    traj = _exact_trajectory(np.sin, np.cos, 0.0, 7.0, 701)
    roots = detect_sign_crossings(traj, 0)
    roots = [r for r in roots if r > 1e-6]
    assert len(roots) == 2
    assert abs(roots[0] - math.pi) <= 1e-8 and abs(roots[1] - 2 * math.pi) <= 1e-8


def test_sine_crossings_integrated():
    traj = integrate_ivp(lambda t, y: [math.cos(t)], [0.0], 0.0, 7.0, NumericPolicy(rtol=1e-12, atol=1e-14))
    roots = [r for r in detect_sign_crossings(traj, 0) if r > 1e-6]
    assert np.allclose(roots, [math.pi, 2 * math.pi], rtol=0, atol=1e-8)


def test_crossing_component_out_of_range():
    traj = integrate_ivp(lambda t, y: [-1.0], [1.0], 0.0, 2.0)
    with pytest.raises(PreconditionError):
        detect_sign_crossings(traj, 3)


# -- f0 diagnostic ----------------------------------------------------------

def test_f0_nondecreasing_for_nonnegative_q0():
    ps = problem_from_strings(a=(1, 0, 0, 0), d=(-1, 0, 0, 0), horizon=10.0, gamma=(0.2, 0, 0, 0))
    traj = integrate_problem(ps)
    values, low = f0_diagnostic(ps, traj)
    assert values[0] == 0.0 and low == 0.0
    assert np.all(np.diff(values) >= 0)
    # q0 = tanh(t + c) with tanh c = 0.2, so f0 = ln cosh(t + c) - ln cosh c
    c = math.atanh(0.2)
    exact = np.log(np.cosh(traj.times + c)) - math.log(math.cosh(c))
    assert np.abs(values - exact).max() <= 1e-7


def test_f0_zero_without_a():
    ps = problem_from_strings(d=(-1, 0, 0, 0), horizon=3.0, gamma=(0.5, 0, 0, 0))
    values, low = f0_diagnostic(ps, integrate_problem(ps))
    assert not values.any() and low == 0.0


def test_f0_strongly_negative_before_escape():
    ps = problem_from_strings(a=(1, 0, 0, 0), d=(1, 0, 0, 0), horizon=3.0)
    traj = integrate_problem(ps)
    assert traj.escaped
    _, low = f0_diagnostic(ps, traj)
    # int_0^t -tan = ln cos t, which reaches ln(cos(atan 1e8)) = -18.4
    assert low < -15
