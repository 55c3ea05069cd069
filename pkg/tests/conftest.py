from pathlib import Path

import pytest
from hypothesis import settings

from qriccati.coeffexpr.config import problem_from_strings

settings.register_profile("ci", deadline=None, max_examples=60)
settings.load_profile("ci")

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

ACCEPTANCE_TITLES = {
    1: "symbol homomorphism",
    2: "determinant law",
    3: "three-formulation equivalence",
    4: "closed-form Riccati",
    5: "escape-time detection",
    6: "sign criterion verification",
    7: "fiver criterion worked family",
    8: "fiver quadratic-form brute force",
    9: "partition integral criterion",
    10: "envelope criteria",
    11: "sign-changing criterion and reversal",
    12: "non-conjugation harness",
    13: "scalar comparison oracle",
    14: "parser, derivative and config round trip",
}


def pytest_configure(config):
    config._acceptance = {}


@pytest.fixture
def acceptance(request):
    """Record one acceptance criterion: ``acceptance(n, ok, detail)``."""
    store = request.config._acceptance

    def record(n, ok, detail=""):
        store[n] = (bool(ok), detail)
        line = f"ACCEPTANCE {n:2d} [{'PASS' if ok else 'FAIL'}] {ACCEPTANCE_TITLES[n]}: {detail}"
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_acceptance", {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in ACCEPTANCE_TITLES.items():
        if n in store:
            ok, detail = store[n]
            terminalreporter.write_line(f"{n:2d}. [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
        else:
            terminalreporter.write_line(f"{n:2d}. [NOT RUN] {title}")


# -- shared example problems -------------------------------------------------

def scalar_family():
    """a = 1, d = -1: q0' = 1 - q0^2."""
    return problem_from_strings(a=(1, 0, 0, 0), d=(-1, 0, 0, 0), horizon=20.0, gamma=(1.0, 0, 0, 0))


def fiver_family():
    return problem_from_strings(
        a=(1, 1, 1, 1), b=(0, -2, 2, 3), c=(0, -2, -2, -3), d=(-0.25, 8.25, 0.25, 9.25),
        horizon=5.0, epsilon=1.0, gamma=(0.5, 0.5, 0.5, 0.5))


SIGN_CHANGING_ENV = {"alpha1": -1.1, "alpha2": 1.1, "beta1": -1, "beta2": 1}


def sign_changing_family(b0=1.1, **kw):
    return problem_from_strings(
        a=("sin(t)", 0, 0, 0), b=(b0, 0, 0, 0), c=(b0, 0, 0, 0), d=(-0.02, 0, 0, 0), horizon=10.0,
        gamma=(0.9, 0.05, 0.05, 0.05), Gamma=0.1, envelopes=dict(SIGN_CHANGING_ENV), **kw)
