"""Verdicts, evaluation grids and the key = value report format."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..coeffexpr.config import ProblemSpec
from ..errors import PreconditionError

#: slack allowed on non-strict pointwise inequalities
TAU = 1e-9
#: slack on the integral condition of the partition criterion
TAU_INT = 1e-9
#: absolute slack on state bounds during verification
TOL_VERIFY = 1e-6
DEFAULT_GRID_POINTS = 2049


def format_value(v) -> str:
    """Report formatting: 17 significant digits, ``none``, ``true``/``false``."""
    if v is None:
        return "none"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(v)


def report_lines(pairs) -> list[str]:
    return [f"{k} = {format_value(v)}" for k, v in pairs]


@dataclass(frozen=True)
class Verdict:
    """Outcome of a criterion check.

    ``violated`` is the first failing condition in the criterion's order and
    ``witness_t`` the earliest grid time where it fails; ``violations`` lists
    every failing condition.  ``params`` carries what verification needs
    (index set, epsilon, envelopes, Gamma data ...).
    """

    criterion: str
    holds: bool
    witness_t: float | None
    violated: str | None
    margin: float
    grid: str
    borderline: bool = False
    violations: tuple[str, ...] = ()
    params: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.holds and (self.witness_t is None or self.violated is None):
            raise ValueError("a failing verdict needs a witness time and a condition label")

    def report(self) -> list[str]:
        return report_lines([
            ("criterion", self.criterion),
            ("holds", self.holds),
            ("witness_t", self.witness_t),
            ("violated", self.violated),
            ("margin", self.margin),
            ("grid", self.grid),
            ("borderline", self.borderline),
        ])

    def to_report(self) -> str:
        return "\n".join(self.report()) + "\n"


def parse_report(text: str) -> dict[str, str]:
    """Inverse of the report format (values stay strings)."""
    out = {}
    for line in text.splitlines():
        if " = " in line:
            k, v = line.split(" = ", 1)
            out[k.strip()] = v.strip()
    return out


class ConditionSet:
    """Accumulates per-condition slack arrays in the criterion's order."""

    def __init__(self, tau: float = TAU):
        self.tau = tau
        self._items: list[tuple[str, np.ndarray, np.ndarray, np.ndarray, bool]] = []

    def add(self, label: str, ts, slack, ok=None, strict: bool = False, tol: float | None = None,
            equality: bool = False):
        """Register a condition.  ``equality`` marks identically-zero
        requirements, whose zero slack is left out of the margin when met."""
        ts = np.asarray(ts, dtype=float)
        slack = np.broadcast_to(np.asarray(slack, dtype=float), ts.shape)
        tol = self.tau if tol is None else tol
        if ok is None:
            ok = slack > 0 if strict else slack >= -tol
        ok = np.broadcast_to(np.asarray(ok, dtype=bool), ts.shape)
        self._items.append((label, ts, slack, ok, equality))

    def fail(self, label: str, t: float, slack: float = -math.inf):
        """Record a condition found violated outside the grid machinery."""
        self.add(label, np.array([t]), np.array([slack]), ok=np.array([False]))

    def verdict(self, criterion: str, grid: str, params: dict | None = None) -> Verdict:
        violations = []
        witness = None
        finite = []
        for label, ts, slack, ok, equality in self._items:
            fin = slack[np.isfinite(slack)]
            if fin.size and not (equality and ok.all()):
                finite.append(float(fin.min()))
            if not ok.all():
                violations.append(label)
                if witness is None:
                    bad = ts[~ok]
                    witness = float(bad.min())
        margin = min(finite) + 0.0 if finite else math.inf
        holds = not violations
        return Verdict(
            criterion=criterion,
            holds=holds,
            witness_t=witness,
            violated=violations[0] if violations else None,
            margin=margin,
            grid=grid,
            borderline=margin < self.tau,
            violations=tuple(violations),
            params=dict(params or {}),
        )


@dataclass(frozen=True)
class Grid:
    times: np.ndarray
    description: str

    @property
    def midpoints(self) -> np.ndarray:
        t = self.times
        return 0.5 * (t[:-1] + t[1:]) if len(t) > 1 else t


def window_of(ps: ProblemSpec) -> tuple[float, float]:
    if not ps.finite_horizon:
        raise PreconditionError("a finite horizon is required for grid evaluation")
    return ps.t0, ps.horizon


def make_grid(ps: ProblemSpec, grid=None, extra=()) -> Grid:
    """Uniform grid over the window plus partition endpoints and ``extra`` times.

    ``grid`` may be None (2049 points), a point count, or explicit times.
    """
    if grid is None or isinstance(grid, (int, np.integer)):
        n = DEFAULT_GRID_POINTS if grid is None else int(grid)
        if n < 2:
            raise PreconditionError("grid needs at least 2 points")
        lo, hi = window_of(ps)
        base = np.linspace(lo, hi, n)
        desc = f"uniform {n} on [{format_value(lo)}, {format_value(hi)}]"
    else:
        base = np.unique(np.asarray(grid, dtype=float))
        if base.size == 0:
            raise PreconditionError("empty grid")
        lo, hi = float(base[0]), float(base[-1])
        desc = f"explicit {base.size} on [{format_value(lo)}, {format_value(hi)}]"
    added = [p for p in (ps.partition or ()) if lo <= p <= hi]
    added += [float(x) for x in extra if lo <= x <= hi]
    if added:
        base = np.unique(np.concatenate([base, np.asarray(added, dtype=float)]))
        desc += f" + {len(added)} extra"
    return Grid(base, desc)
