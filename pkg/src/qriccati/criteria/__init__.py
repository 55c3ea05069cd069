"""Criterion checkers, envelope data and conclusion verification."""

from .checkers import (
    CHECKERS,
    check_cor_4_1,
    check_thm_3_1,
    check_thm_3_2,
    check_thm_3_3,
    check_thm_3_4,
    check_thm_3_5,
    check_thm_4_1,
    PartitionIntegral,
    partition_integral,
    reversed_problem,
)
from .envelopes import EnvelopeSet, GammaData, gamma_data
from .verdict import TAU, TAU_INT, TOL_VERIFY, ConditionSet, Grid, Verdict, make_grid, parse_report
from .verify import (
    Assertion,
    VerificationReport,
    compare_scalar_riccati,
    integrate_problem,
    terminal_value_solve,
    verify_conclusion,
)

__all__ = [
    "CHECKERS", "check_cor_4_1", "check_thm_3_1", "check_thm_3_2", "check_thm_3_3", "check_thm_3_4",
    "check_thm_3_5", "check_thm_4_1", "PartitionIntegral", "partition_integral", "reversed_problem",
    "EnvelopeSet", "GammaData", "gamma_data",
    "TAU", "TAU_INT", "TOL_VERIFY", "ConditionSet", "Grid", "Verdict", "make_grid", "parse_report",
    "Assertion", "VerificationReport", "compare_scalar_riccati", "integrate_problem",
    "terminal_value_solve", "verify_conclusion",
]
