import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qriccati.errors import SymbolPatternError, ZeroDivisorError
from qriccati.quatcore import (
    E, I, J, K, ONE, QI, QJ, QK, Quaternion, mul_arrays, quat_conj_norm_inv, quat_mul, quat_to_state,
    state_symbol, state_to_quat, symbol, unsymbol, vec_part,
)

comp = st.floats(-10, 10, allow_nan=False)
quats = st.builds(Quaternion, comp, comp, comp, comp)


def test_unit_products():
    assert quat_mul(QI, QJ) == QK
    assert quat_mul(QJ, QI) == -QK
    assert quat_mul(QI, QI) == -ONE
    assert quat_mul(quat_mul(QI, QJ), QK) == -ONE


def test_one_plus_i_times_one_minus_i():
    p, q = Quaternion(1, 1, 0, 0), Quaternion(1, -1, 0, 0)
    assert quat_mul(p, q) == Quaternion(2, 0, 0, 0)
    # oracle: through the symbols
    assert unsymbol(symbol(p) @ symbol(q)) == Quaternion(2, 0, 0, 0)


@given(quats)
def test_identity_element(q):
    assert quat_mul(q, ONE) == q
    assert quat_mul(ONE, q) == q


def test_conj_norm_inv_examples():
    c, n, inv = quat_conj_norm_inv(Quaternion(1, 1, 0, 0))
    assert c == Quaternion(1, -1, 0, 0)
    assert quat_conj_norm_inv(Quaternion(1, 1, 1, 1))[1] == 2.0
    assert quat_conj_norm_inv(Quaternion(2, 0, 0, 0))[2] == Quaternion(0.5, 0, 0, 0)
    with pytest.raises(ZeroDivisorError):
        quat_conj_norm_inv(Quaternion())


@given(quats)
def test_inverse(q):
    if q.norm() < 1e-3:
        return
    prod = quat_mul(q, q.inverse())
    assert np.allclose(prod.as_array(), [1, 0, 0, 0], atol=1e-12)


@given(quats, quats)
def test_conj_anti_automorphism(p, q):
    lhs = quat_mul(p, q).conj().as_array()
    rhs = quat_mul(q.conj(), p.conj()).as_array()
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * (1 + p.norm() * q.norm()))


@given(quats)
def test_q_times_conj_is_norm_squared(q):
    prod = quat_mul(q, q.conj()).as_array()
    n2 = q.norm() ** 2
    assert np.allclose(prod, [n2, 0, 0, 0], atol=1e-12 * (1 + n2))


def test_printed_unit_matrices():
    assert np.array_equal(symbol(ONE), np.eye(4))
    assert np.array_equal(I, [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]])
    assert np.array_equal(E, np.eye(4))
    for u, M in ((QJ, J), (QK, K)):
        assert np.array_equal(symbol(u), M)


@given(quats, quats)
def test_symbol_homomorphism(p, q):
    gap = np.max(np.abs(symbol(quat_mul(p, q)) - symbol(p) @ symbol(q)))
    assert gap <= 1e-12 * (1 + p.norm() * q.norm())


@given(quats, quats, comp)
def test_symbol_linear(p, q, s):
    assert np.allclose(symbol(p + s * q), symbol(p) + s * symbol(q), atol=1e-12 * (1 + abs(s)) * 20)


@given(quats)
def test_determinant_is_norm_fourth(q):
    n4 = q.norm() ** 4
    assert abs(np.linalg.det(symbol(q)) - n4) <= 1e-10 * max(n4, 1e-300) + 1e-300


@given(quats)
def test_unsymbol_round_trip(q):
    assert unsymbol(symbol(q)) == q


def test_unsymbol_examples():
    assert unsymbol(E) == ONE
    q = Quaternion(3, -2, 1, 0)
    assert unsymbol(symbol(q)) == q
    with pytest.raises(SymbolPatternError) as info:
        unsymbol(np.diag([1.0, 2.0, 3.0, 4.0]))
    assert info.value.entry_a == (0, 0) and info.value.entry_b == (1, 1)


def test_unsymbol_tolerance():
    M = symbol(Quaternion(1, 2, 3, 4))
    M[1, 1] += 5e-10
    assert unsymbol(M).w == 1.0
    M[1, 1] += 1e-8
    with pytest.raises(SymbolPatternError):
        unsymbol(M)


def test_vec_part():
    assert np.array_equal(vec_part(Quaternion(5)), [0, 0, 0])
    assert np.array_equal(vec_part(Quaternion(1, 2, 3, 4)), [2, 3, 4])
    assert math.isclose(np.linalg.norm(vec_part(Quaternion(0, 1, 1, 1))), math.sqrt(3))


@given(quats)
def test_vec_part_bounded_by_norm(q):
    assert np.linalg.norm(vec_part(q)) <= q.norm() + 1e-12


@given(quats)
def test_state_convention(q):
    s = quat_to_state(q)
    assert np.array_equal(s, [q.w, -q.x, -q.y, -q.z])
    assert state_to_quat(s) == q
    assert np.array_equal(state_symbol(s), symbol(q))


@given(quats, quats)
def test_mul_arrays_matches_scalar_product(p, q):
    assert np.array_equal(mul_arrays(p.as_array(), q.as_array()), quat_mul(p, q).as_array())
