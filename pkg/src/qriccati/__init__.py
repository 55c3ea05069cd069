"""Global solvability criteria for quaternionic Riccati equations.

The equation is ``q' + q a(t) q + b(t) q + q c(t) + d(t) = 0``.  Subpackages:

* :mod:`qriccati.quatcore`: quaternion arithmetic and the 4x4 symbol map
* :mod:`qriccati.coeffexpr`: coefficient expressions and problem configs
* :mod:`qriccati.model`: the real system, derived coefficients, fivers
* :mod:`qriccati.integrator`: adaptive Dormand-Prince with escape detection
* :mod:`qriccati.criteria`: criterion checkers and conclusion verification
* :mod:`qriccati.nonconj`: the non-conjugation harness
"""

from .coeffexpr import ProblemSpec, dump_problem_config, load_problem_config, parse_expr, parse_problem_config
from .coeffexpr.config import problem_from_strings
from .criteria import (
    CHECKERS,
    Verdict,
    VerificationReport,
    check_cor_4_1,
    check_thm_3_1,
    check_thm_3_2,
    check_thm_3_3,
    check_thm_3_4,
    check_thm_3_5,
    check_thm_4_1,
    compare_scalar_riccati,
    integrate_problem,
    terminal_value_solve,
    verify_conclusion,
)
from .errors import InputError, NumericalError, QRiccatiError
from .integrator import NumericPolicy, Trajectory, integrate_ivp
from .nonconj import NonconjInput, NonconjReport, liouville_check, run_nonconj
from .quatcore import Quaternion, state_symbol, symbol, unsymbol

__version__ = "0.1.0"

__all__ = [
    "ProblemSpec", "dump_problem_config", "load_problem_config", "parse_expr", "parse_problem_config",
    "problem_from_strings",
    "CHECKERS", "Verdict", "VerificationReport", "check_cor_4_1", "check_thm_3_1", "check_thm_3_2",
    "check_thm_3_3", "check_thm_3_4", "check_thm_3_5", "check_thm_4_1", "compare_scalar_riccati",
    "integrate_problem", "terminal_value_solve", "verify_conclusion",
    "InputError", "NumericalError", "QRiccatiError",
    "NumericPolicy", "Trajectory", "integrate_ivp",
    "NonconjInput", "NonconjReport", "liouville_check", "run_nonconj",
    "Quaternion", "state_symbol", "symbol", "unsymbol",
]
