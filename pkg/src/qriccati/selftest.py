"""Closed-form oracles behind ``qriccati selftest``.

Each check returns ``(name, passed, detail)``.  The cases are small and fixed
so the output is reproducible.
"""

from __future__ import annotations

import math

import numpy as np

from .coeffexpr.config import problem_from_strings
from .criteria import check_thm_3_1, compare_scalar_riccati, integrate_problem
from .integrator import NumericPolicy
from .quatcore import Quaternion, quat_mul, symbol


def _symbol_homomorphism():
    rng = np.random.default_rng(20240101)
    worst = 0.0
    for _ in range(200):
        p = Quaternion.from_array(rng.uniform(-10, 10, 4))
        q = Quaternion.from_array(rng.uniform(-10, 10, 4))
        gap = np.max(np.abs(symbol(quat_mul(p, q)) - symbol(p) @ symbol(q)))
        worst = max(worst, gap / (1 + p.norm() * q.norm()))
    return "symbol_homomorphism", worst <= 1e-12, f"max scaled gap {worst:.3g}"


def _scalar_decay():
    # q' = -q^2, q(0) = 1  =>  q(t) = 1/(1 + t)
    ps = problem_from_strings(a=(1, 0, 0, 0), horizon=10.0, gamma=(1.0, 0, 0, 0))
    traj = integrate_problem(ps, NumericPolicy())
    rel = abs(traj.states[-1, 0] - 1 / 11) * 11
    return "riccati_closed_form", traj.completed and rel <= 1e-8, f"relative error {rel:.3g}"


def _escape():
    # q' = -(1 + q^2), q(0) = 0  =>  q = -tan t escapes at pi/2
    ps = problem_from_strings(a=(1, 0, 0, 0), d=(1, 0, 0, 0), horizon=3.0)
    traj = integrate_problem(ps, NumericPolicy())
    ok = traj.escaped and abs(traj.t_escape - math.pi / 2) <= 1e-3
    gap = math.inf if traj.t_escape is None else abs(traj.t_escape - math.pi / 2)
    return "escape_time", ok, f"status {traj.status}, |t_escape - pi/2| = {gap:.3g}"


def _tanh_comparison():
    one, zero = (lambda t: 1.0), (lambda t: 0.0)
    ok = compare_scalar_riccati(one, zero, lambda t: -1.0, one, zero, zero, 0.0, 0.0, (0.0, 5.0))
    return "comparison_tanh", bool(ok), "y0 = tanh(t) above y1 = 0"


def _sign_criterion():
    ps = problem_from_strings(a=(1, 0, 0, 0), d=(-1, 0, 0, 0), horizon=20.0)
    good = check_thm_3_1(ps).holds
    bad = check_thm_3_1(ps.replace(d=problem_from_strings(d=(1, 0, 0, 0)).d))
    ok = good and not bad.holds and bad.violated == "D_0 ≤ 0"
    return "sign_criterion", ok, f"d0 = -1 holds, d0 = +1 violates {bad.violated}"


CHECKS = (_symbol_homomorphism, _scalar_decay, _escape, _tanh_comparison, _sign_criterion)


def run_selftests() -> list[tuple[str, bool, str]]:
    return [check() for check in CHECKS]
