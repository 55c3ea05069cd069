"""Coefficient expressions and problem configuration files."""

from .expr import Expr, diff, simplify, substitute
from .parser import parse_expr
from .config import ProblemSpec, dump_problem_config, load_problem_config, parse_problem_config

__all__ = [
    "Expr", "diff", "simplify", "substitute", "parse_expr",
    "ProblemSpec", "load_problem_config", "parse_problem_config", "dump_problem_config",
    "eval_expr", "diff_expr",
]


def eval_expr(e: Expr, t: float) -> float:
    return e.evaluate(t)


def diff_expr(e: Expr) -> Expr:
    return diff(e)
