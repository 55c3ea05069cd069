import math
import random

import numpy as np
import pytest

from exprgen import random_source
from qriccati.coeffexpr import diff_expr, eval_expr, parse_expr
from qriccati.coeffexpr.config import (
    dump_problem_config, load_problem_config, parse_problem_config, problem_from_strings,
)
from qriccati.coeffexpr.expr import ZERO, Add, Const, Mul, Neg, Pow, T, Var, abs_arguments, simplify
from qriccati.errors import (
    ConfigSyntaxError, ExprDomainError, ExprSyntaxError, InputError, ValidationError,
)

from conftest import CONFIGS


def test_parse_structure():
    assert parse_expr("2*t + sin(t)") == Add(Mul(Const(2.0), T), parse_expr("sin(t)"))
    assert parse_expr("-t^2") == Neg(Pow(T, Const(2.0)))


def test_power_right_associative():
    assert parse_expr("2^3^2").evaluate(0.0) == 512.0


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("2 ** t")
    assert info.value.offset == 3
    assert "NUMBER" in info.value.expected


@pytest.mark.parametrize("src", ["", "sin t", "(t", "t +", "foo(t)", "1.2.3", "t t"])
def test_syntax_errors(src):
    with pytest.raises(ExprSyntaxError):
        parse_expr(src)


def test_evaluation_examples():
    assert eval_expr(parse_expr("t^2 + 1"), 2.0) == 5.0
    assert abs(eval_expr(parse_expr("sin(pi)"), 7.0)) <= 1e-15
    with pytest.raises(ExprDomainError) as info:
        eval_expr(parse_expr("ln(t)"), 0.0)
    assert info.value.t == 0.0


@pytest.mark.parametrize("src,t", [("sqrt(t)", -1.0), ("1/t", 0.0), ("ln(-t)", 1.0)])
def test_domain_errors(src, t):
    with pytest.raises(ExprDomainError):
        parse_expr(src).evaluate(t)


def test_array_evaluation_matches_scalar():
    e = parse_expr("exp(-t) * cos(3*t) + atan(t)^2 - tanh(t)/2")
    ts = np.linspace(-2, 2, 17)
    # numpy and math ufuncs may differ in the last ulp
    assert np.allclose(e.evaluate(ts), [e.evaluate(float(t)) for t in ts], rtol=1e-14, atol=1e-15)


def test_derivative_examples():
    assert diff_expr(parse_expr("sin(t)")) == parse_expr("cos(t)")
    assert simplify(diff_expr(parse_expr("t^2"))) == Mul(Const(2.0), T)
    d = diff_expr(parse_expr("exp(2*t)"))
    h = 1e-5
    e = parse_expr("exp(2*t)")
    fd = (e(1 + h) - e(1 - h)) / (2 * h)
    assert abs(d(1.0) - fd) <= 1e-6 * abs(fd)


def test_abs_derivative_sign_convention():
    d = diff_expr(parse_expr("abs(t)"))
    assert d(-2.0) == -1.0 and d(3.0) == 1.0 and d(0.0) == 0.0


def _fd_tol(v):
    return max(1e-6 * abs(v), 1e-8)


def test_random_derivatives_against_central_difference():
    rng = random.Random(7)
    checked = 0
    for _ in range(100):
        e = parse_expr(random_source(rng, 6))
        d = diff_expr(e)
        kinks = abs_arguments(e)
        for _ in range(10):
            t = rng.uniform(-3, 3)
            try:
                if any(np.ptp(np.sign([k(t - 1e-3), k(t), k(t + 1e-3)])) > 0 for k in kinks):
                    continue
                f = [e(t + s) for s in (-2e-5, -1e-5, 1e-5, 2e-5)]
                dv = d(t)
            except (ExprDomainError, OverflowError):
                continue
            if max(abs(v) for v in f) > 1e2:
                continue
            fd1 = (f[2] - f[1]) / 2e-5
            fd2 = (f[3] - f[0]) / 4e-5
            # the difference quotient itself is unreliable where these disagree
            if abs(fd1 - fd2) > 0.25 * _fd_tol(fd1):
                continue
            assert abs(dv - fd1) <= _fd_tol(fd1), (str(e), t, dv, fd1)
            checked += 1
    assert checked >= 300


def test_parse_print_round_trip():
    rng = random.Random(11)
    for _ in range(300):
        e = parse_expr(random_source(rng, 6))
        assert parse_expr(str(e)) == e


def test_evaluation_deterministic():
    e = parse_expr("sin(exp(t)) / (1 + t^2) - sqrt(abs(t))")
    assert e(0.7).hex() == e(0.7).hex()


# -- configuration ------------------------------------------------------------

SCALAR_CFG = """
[problem]
a0 = 1
d0 = -1
gamma0 = 1
t0 = 0
horizon = 20
"""


def test_config_defaults():
    ps = parse_problem_config(SCALAR_CFG)
    assert ps.b == (ZERO,) * 4 and ps.c == (ZERO,) * 4
    assert ps.a[0] == Const(1.0) and ps.d[0] == Neg(Const(1.0))
    assert ps.horizon == 20.0 and ps.gamma == (1.0, 0.0, 0.0, 0.0)


def test_config_validation_messages():
    with pytest.raises(ValidationError, match="horizon"):
        parse_problem_config("t0 = 0\nhorizon = -1\n")
    with pytest.raises(ValidationError, match="epsilon > 0 required"):
        parse_problem_config("t0 = 0\nhorizon = 1\nepsilon = -1\n")
    with pytest.raises(ValidationError, match="partition"):
        parse_problem_config("t0 = 0\nhorizon = 1\npartition = 0.5, 0.2\n")
    with pytest.raises(ValidationError, match="S_set"):
        parse_problem_config("t0 = 0\nhorizon = 1\nS_set = 0, 4\n")


@pytest.mark.parametrize("text,fragment", [
    ("t0 = 0\nhorizon = 1\nfoo = 1\n", "unknown key"),
    ("t0 = 0\nt0 = 1\nhorizon = 2\n", "duplicate key"),
    ("[weird]\nt0 = 0\n", "unknown section"),
    ("t0 = 0\nhorizon 1\n", "key = value"),
    ("t0 = 0\nhorizon = 1\na0 = sin(\n", "a0"),
])
def test_config_syntax_errors(text, fragment):
    with pytest.raises(ConfigSyntaxError, match=fragment):
        parse_problem_config(text, "x.cfg")


def test_config_syntax_error_has_line():
    with pytest.raises(ConfigSyntaxError) as info:
        parse_problem_config("t0 = 0\n\nbogus = 3\n", "p.cfg")
    assert info.value.line == 3 and "p.cfg:3" in str(info.value)


def test_config_constants_and_inf():
    ps = parse_problem_config("t0 = pi\nhorizon = inf\npartition = pi, 2*pi\n")
    assert ps.t0 == math.pi and ps.horizon == math.inf
    assert ps.partition == (math.pi, 2 * math.pi)


def test_load_missing_file(tmp_path):
    with pytest.raises(InputError, match="I/O error"):
        load_problem_config(tmp_path / "absent.cfg")


def test_round_trip_example_configs():
    for path in sorted(CONFIGS.glob("example_*.cfg")):
        ps = load_problem_config(path)
        assert parse_problem_config(dump_problem_config(ps)) == ps, path.name


def test_round_trip_full_spec():
    ps = problem_from_strings(
        a=("sin(t)", "0", "t^2", "1"), b=("exp(-t)", 0, 0, "abs(t - 1)"), d=(-1, 0, 0, 0),
        t0=0.5, horizon=7.25, gamma=(0.1, -0.2, 0.3, 1e-9), epsilon=0.5, Gamma=2.0, S_set=(0, 2),
        partition=(0.5, 1.0, 3.0), envelopes={"alpha": "1 + t", "beta": "exp(2*t)"},
        numeric={"rtol": 1e-9, "atol": 1e-12})
    assert parse_problem_config(dump_problem_config(ps)) == ps


def test_problem_spec_is_immutable():
    ps = parse_problem_config(SCALAR_CFG)
    with pytest.raises(Exception):
        ps.t0 = 3.0
    assert ps.replace(horizon=5.0).horizon == 5.0 and ps.horizon == 20.0
