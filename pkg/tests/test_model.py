import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sint

from conftest import fiver_family, scalar_family
from qriccati.coeffexpr.config import problem_from_strings
from qriccati.errors import PreconditionError
from qriccati.integrator import NumericPolicy, integrate_ivp
from qriccati.model import (
    CoefficientEvaluator, Fiver, LinearSystemRHS, build_fivers, check_fiver_eps, derived_coefficients,
    eval_W, matrix_riccati_rhs, quad_Igh, real_rhs, transform_coefficients, transform_of,
)
from qriccati.quatcore import quat_to_state, state_symbol, symbol_array, unsymbol

TIGHT = NumericPolicy(rtol=1e-11, atol=1e-13)
small = st.floats(-1, 1, allow_nan=False)


# -- derived coefficients ---------------------------------------------------

def test_D0_constant_family():
    dc = derived_coefficients(scalar_family())
    assert np.all(dc.D_array(np.linspace(0, 20, 11))[0] == -4.0)


def test_D0_degenerate_branch():
    ps = problem_from_strings(d=("sin(t)", 0, 0, 0), horizon=10.0)
    ts = np.linspace(0, 10, 31)
    assert np.allclose(derived_coefficients(ps).D_array(ts)[0], 4 * np.sin(ts), rtol=0, atol=1e-15)


def test_worked_family_p_and_D():
    dc = derived_coefficients(fiver_family())
    assert [dc.p(1, m, 0.3) for m in (1, 2, 3)] == [-4.0, 4.0, 6.0]
    assert dc.D(1, 0.3) == (-4) ** 2 + 4 ** 2 + 6 ** 2 - 4 * 8.25 == 35.0
    assert [dc.D(n, 1.0) for n in range(4)] == [15.0, 35.0, 35.0, 15.0]


@given(st.lists(small, min_size=8, max_size=8))
def test_p_sign_table(v):
    b, c = (0.0, *v[:3]), (0.0, *v[3:6])
    ps = problem_from_strings(b=b, c=c, horizon=1.0)
    dc = derived_coefficients(ps)
    b1, b2, b3 = b[1:]
    c1, c2, c3 = c[1:]
    expected = [
        [b1 + c1, b2 + c2, b3 + c3],
        [b1 + c1, b2 - c2, b3 - c3],
        [b1 - c1, b2 + c2, b3 - c3],
        [b1 - c1, b2 - c2, b3 - c3],
    ]
    got = [[dc.p(n, m, 0.0) for m in (1, 2, 3)] for n in range(4)]
    assert np.allclose(got, expected, rtol=0, atol=1e-15)


# -- right-hand sides -------------------------------------------------------

def test_real_rhs_examples():
    ps = problem_from_strings(a=(1, 0, 0, 0), horizon=1.0)
    assert np.array_equal(real_rhs(ps)(0.0, [1.0, 0, 0, 0]), [-1.0, 0, 0, 0])
    ps = problem_from_strings(d=(-1, 0, 0, 0), horizon=1.0)
    assert real_rhs(ps)(0.0, [0.0, 0, 0, 0])[0] == 1.0


def _random_problem(rng, t_pool=("t", "t^2", "sin(t)", "cos(2*t)", "1")):
    def comp():
        return f"{rng.uniform(-1, 1):.6f}*{rng.choice(t_pool)}"
    return problem_from_strings(a=[comp() for _ in range(4)], b=[comp() for _ in range(4)],
                                c=[comp() for _ in range(4)], d=[comp() for _ in range(4)], horizon=2.0)


def test_real_rhs_matches_matrix_riccati_on_symbols():
    rng = np.random.default_rng(3)
    for _ in range(50):
        ps = _random_problem(rng)
        f, M = real_rhs(ps), matrix_riccati_rhs(ps)
        t = rng.uniform(0, 2)
        y = rng.uniform(-2, 2, 4)
        via_matrix = quat_to_state(unsymbol(M(t, state_symbol(y))))
        assert np.allclose(f(t, y), via_matrix, rtol=0, atol=1e-12)


def test_scalar_reduction_of_real_rhs():
    ps = problem_from_strings(a=("1 + t", 0, 0, 0), b=("t", 0, 0, 0), c=(0.5, 0, 0, 0), d=("cos(t)", 0, 0, 0),
                              horizon=1.0)
    f = real_rhs(ps)
    t, q0 = 0.4, 0.7
    expected = -(1 + t) * q0 ** 2 - (t + 0.5) * q0 - math.cos(t)
    assert abs(f(t, [q0, 0, 0, 0])[0] - expected) <= 1e-15


def test_matrix_riccati_examples():
    ps = problem_from_strings(d=(1, 0, 0, 0), horizon=1.0)
    assert np.array_equal(matrix_riccati_rhs(ps)(0.3, np.zeros((4, 4))), -np.eye(4))
    ps = problem_from_strings(a=(1, 0, 0, 0), horizon=3.0)
    traj = integrate_ivp(matrix_riccati_rhs(ps).flat, np.eye(4).reshape(-1), 0.0, 3.0, TIGHT)
    assert np.allclose(traj.states[-1].reshape(4, 4), np.eye(4) / 4, rtol=1e-9, atol=1e-12)


def test_matrix_flow_preserves_symbol_pattern():
    rng = np.random.default_rng(5)
    ps = _random_problem(rng)
    y0 = rng.uniform(-0.5, 0.5, 4)
    traj = integrate_ivp(matrix_riccati_rhs(ps).flat, state_symbol(y0).reshape(-1), 0.0, 2.0, TIGHT)
    assert traj.completed
    for Y in traj.states:
        unsymbol(Y.reshape(4, 4), tol=1e-9)


def test_linear_system_examples():
    ps = problem_from_strings(a=(1, 0, 0, 0), d=(-1, 0, 0, 0), horizon=2.0)
    sys = LinearSystemRHS(ps, 1)
    e1 = np.array([1.0, 0, 0, 0])
    traj = integrate_ivp(sys.flat, sys.pack(e1, e1), 0.0, 2.0, TIGHT)
    phi, psi = sys.unpack(traj.states[-1])
    assert np.allclose(phi, math.exp(2) * e1, rtol=1e-10) and np.allclose(psi, phi, rtol=1e-12)
    zero = LinearSystemRHS(problem_from_strings(horizon=1.0), 4)
    dphi, dpsi = zero(0.5, np.eye(4), 2 * np.eye(4))
    assert not dphi.any() and not dpsi.any()
    with pytest.raises(ValueError):
        LinearSystemRHS(ps, 2)


def test_substitution_pair_solves_linear_system():
    # Y solves the matrix Riccati equation, Phi' = (A Y + C) Phi; then (Phi, Y Phi) solves the linear system
    rng = np.random.default_rng(8)
    ps = _random_problem(rng)
    M = matrix_riccati_rhs(ps)
    ev = CoefficientEvaluator(ps)

    def joint(t, y):
        Y, Phi = y[:16].reshape(4, 4), y[16:].reshape(4, 4)
        A, C = (symbol_array(r) for r in ev(t)[[0, 2]])
        return np.concatenate([M(t, Y).reshape(-1), ((A @ Y + C) @ Phi).reshape(-1)])

    y0 = np.concatenate([state_symbol(rng.uniform(-0.5, 0.5, 4)).reshape(-1), np.eye(4).reshape(-1)])
    traj = integrate_ivp(joint, y0, 0.0, 1.5, TIGHT)
    lin = LinearSystemRHS(ps, 4)
    for t, y, dy in zip(traj.times, traj.states, traj.derivs):
        Y, Phi = y[:16].reshape(4, 4), y[16:].reshape(4, 4)
        dY, dPhi = dy[:16].reshape(4, 4), dy[16:].reshape(4, 4)
        want_phi, want_psi = lin(t, Phi, Y @ Phi)
        scale = 1 + np.abs(Phi).max() * (1 + np.abs(Y).max())
        assert np.abs(dPhi - want_phi).max() <= 1e-8 * scale
        assert np.abs(dY @ Phi + Y @ dPhi - want_psi).max() <= 1e-8 * scale


# -- transforms -------------------------------------------------------------

def test_negate_is_involution():
    ps = fiver_family()
    assert transform_coefficients(transform_coefficients(ps, "negate"), "negate") == ps


def test_conjugate_with_equal_b_c():
    ps = problem_from_strings(a=(1, 2, 3, 4), b=(1, -1, 2, 0.5), c=(1, -1, 2, 0.5), horizon=1.0)
    tp = transform_coefficients(ps, "conjugate")
    ev = CoefficientEvaluator(tp)(0.0)
    assert np.array_equal(ev[1], [1, 1, -2, -0.5]) and np.array_equal(ev[2], ev[1])


def test_invalid_unit():
    with pytest.raises(PreconditionError, match="invalid unit"):
        transform_coefficients(scalar_family(), ("left_unit", "q"))
    with pytest.raises(PreconditionError):
        transform_coefficients(scalar_family(), "rotate")


@pytest.mark.parametrize("kind", ["negate", "conjugate", "left_unit(i)", "left_unit(j)", "left_unit(k)"])
def test_transform_dual_integration(kind):
    rng = np.random.default_rng(abs(hash(kind)) % 2 ** 32)
    comps = lambda: tuple(rng.uniform(-0.5, 0.5, 4))  # noqa: E731
    gamma = tuple(rng.uniform(-0.5, 0.5, 4))
    ps = problem_from_strings(a=comps(), b=comps(), c=comps(), d=comps(), horizon=1.0, gamma=gamma)
    tp = transform_coefficients(ps, kind)
    tr = transform_of(kind)
    orig = integrate_ivp(real_rhs(ps), np.array(gamma), 0.0, 1.0, TIGHT)
    new = integrate_ivp(real_rhs(tp), np.array(tp.gamma), 0.0, 1.0, TIGHT)
    assert orig.completed and new.completed
    ts = np.linspace(0, 1, 21)
    assert np.allclose(tr.map_back(new.dense(ts)), orig.dense(ts), rtol=0, atol=1e-8)


# -- quadrature -------------------------------------------------------------

def test_quad_Igh_closed_forms():
    assert abs(quad_Igh(0.0, 1.0, 0.5, 3.0) - 2.5) <= 1e-12
    assert abs(quad_Igh(1.0, 1.0, 0.0, 4.0) - (1 - math.exp(-4))) <= 1e-9
    assert quad_Igh(math.sin, math.cos, 2.0, 2.0) == 0.0
    with pytest.raises(PreconditionError):
        quad_Igh(1.0, 1.0, 1.0, 0.0)


def _scipy_Igh(g, h, xi, t):
    inner = lambda tau: sint.quad(g, tau, t, epsabs=1e-13, epsrel=1e-13)[0]  # noqa: E731
    return sint.quad(lambda tau: math.exp(-inner(tau)) * h(tau), xi, t, epsabs=1e-13, epsrel=1e-13)[0]


@pytest.mark.parametrize("g,h,xi,t", [
    (math.sin, math.cos, 0.0, 3.0),
    (lambda s: 1 + s * s, lambda s: math.exp(-s), -1.0, 2.0),
    (lambda s: -0.5, lambda s: s, 0.0, 5.0),
])
def test_quad_Igh_against_scipy(g, h, xi, t):
    ref = _scipy_Igh(g, h, xi, t)
    assert abs(quad_Igh(g, h, xi, t) - ref) <= 1e-9 * max(1.0, abs(ref))


def test_quad_Igh_additive_in_h():
    g = lambda s: math.cos(s)  # noqa: E731
    h1 = lambda s: s * s  # noqa: E731
    h2 = lambda s: math.exp(-s)  # noqa: E731
    both = quad_Igh(g, lambda s: h1(s) + h2(s), 0.0, 3.0)
    assert abs(both - quad_Igh(g, h1, 0.0, 3.0) - quad_Igh(g, h2, 0.0, 3.0)) <= 1e-9


# -- fivers -----------------------------------------------------------------

def test_eval_W_examples():
    assert eval_W(Fiver(1, 3, 0, 0, 4), 0, 0, 0) == 1.25
    assert eval_W(Fiver(2, 0, 0, 0, 3), 0, 0, 0) == -3 / 8
    with pytest.raises(PreconditionError):
        eval_W(Fiver(0, 1, 1, 1, 1), 0, 0, 0)


def _grid_min_W(f, step):
    x = np.arange(0, 10 + step / 2, step)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij", sparse=True)
    p, q, r, s, l = f  # noqa: E741
    W = p * ((X + q / (2 * p)) ** 2 + (Y + r / (2 * p)) ** 2 + (Z + s / (2 * p)) ** 2) - l / (4 * p)
    return float(W.min())


def test_eval_W_grid_minimum_example():
    assert _grid_min_W(Fiver(1, 3, 0, 0, 4), 0.1) >= 0.25 - 1e-12


def test_check_fiver_eps_examples():
    ok = check_fiver_eps(Fiver(1, 3, 0, 0, 4), 1.0)
    assert ok.ok
    assert not check_fiver_eps(Fiver(1, 0, 0, 0, 4), 1.0).ok
    for eps in (0.1, 1.0, 10.0):
        assert not check_fiver_eps(Fiver(-1, 9, 9, 9, 1), eps).ok


def test_strict_source_uses_literal_l_plus_s():
    # q^2 + r^2 + s^2 = 3.44 meets l + eps = 3 but not the literal l + s = 3.7
    f = Fiver(1, 1, 1, 1.2, 2.5)
    assert check_fiver_eps(f, 0.5).ok
    assert not check_fiver_eps(f, 0.5, strict_source=True).ok


@given(st.floats(0.1, 3), st.floats(-3, 6), st.floats(-3, 6), st.floats(-3, 6), st.floats(0.01, 5),
       st.floats(0.05, 2))
def test_lemma_property(p, q, r, s, l, eps):  # noqa: E741
    f = Fiver(p, q, r, s, l)
    if check_fiver_eps(f, eps).ok:
        assert _grid_min_W(f, 0.1) >= eps / (4 * p) - 1e-9


def test_build_fivers_examples():
    ps = problem_from_strings(a=(1, 1, 1, 1), horizon=1.0)
    assert build_fivers(derived_coefficients(ps))(0.2) == (Fiver(1, 0, 0, 0, 0),) * 4
    L = build_fivers(derived_coefficients(fiver_family()))(2.0)
    assert L == (Fiver(1, 4, 0, 0, 15), Fiver(1, -4, -4, 6, 35), Fiver(1, 0, 0, 6, 35), Fiver(1, 0, 4, 0, 15))
    ps = problem_from_strings(a=("sin(t)", 0, 0, 0), horizon=5.0)
    assert build_fivers(derived_coefficients(ps))(4.0)[0].p == math.sin(4.0)
