"""Problem configuration: the ``ProblemSpec`` type and its text format.

The file format is line-oriented ``key = value`` with ``#`` comments and
optional ``[problem]``, ``[numeric]`` and ``[criterion]`` section headers.
Keys may appear in any section.  Coefficient values are expressions in ``t``;
time values (``t0``, ``horizon``, ``partition``) may be constant expressions
such as ``4*pi``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigSyntaxError, ExprSyntaxError, InputError, ValidationError
from .expr import ZERO, Expr
from .parser import parse_expr

COEFF_NAMES = ("a", "b", "c", "d")
COEFF_KEYS = tuple(f"{n}{k}" for n in COEFF_NAMES for k in range(4))
GAMMA_KEYS = tuple(f"gamma{k}" for k in range(4))
ENVELOPE_KEYS = ("alpha", "beta", "alpha1", "alpha2", "beta1", "beta2")
NUMERIC_KEYS = ("rtol", "atol", "max_step", "blowup_norm")
SECTIONS = ("problem", "numeric", "criterion")
KNOWN_KEYS = frozenset(
    COEFF_KEYS + GAMMA_KEYS + ENVELOPE_KEYS + NUMERIC_KEYS
    + ("t0", "horizon", "epsilon", "Gamma", "S_set", "partition"))


@dataclass(frozen=True)
class ProblemSpec:
    """Coefficients of ``q' + q a q + b q + q c + d = 0`` plus run data.

    ``a``, ``b``, ``c``, ``d`` each hold the four component expressions
    (real, i, j, k).  ``gamma`` is the initial state ``(q0, q1, q2, q3)``.
    """

    a: tuple[Expr, Expr, Expr, Expr] = (ZERO, ZERO, ZERO, ZERO)
    b: tuple[Expr, Expr, Expr, Expr] = (ZERO, ZERO, ZERO, ZERO)
    c: tuple[Expr, Expr, Expr, Expr] = (ZERO, ZERO, ZERO, ZERO)
    d: tuple[Expr, Expr, Expr, Expr] = (ZERO, ZERO, ZERO, ZERO)
    t0: float = 0.0
    horizon: float = 1.0
    gamma: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    epsilon: float | None = None
    Gamma: float | None = None
    S_set: tuple[int, ...] | None = None
    partition: tuple[float, ...] | None = None
    envelopes: dict = field(default_factory=dict)
    numeric: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in COEFF_NAMES:
            comps = getattr(self, name)
            if len(comps) != 4 or not all(isinstance(e, Expr) for e in comps):
                raise ValidationError(f"{name} needs four component expressions")
        if not math.isfinite(self.t0):
            raise ValidationError("t0 must be finite")
        if not self.horizon > self.t0:
            raise ValidationError("horizon > t0 required")
        if len(self.gamma) != 4 or not all(math.isfinite(g) for g in self.gamma):
            raise ValidationError("gamma0..gamma3 must be finite reals")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValidationError("epsilon > 0 required")
        if self.Gamma is not None and not self.Gamma > 0:
            raise ValidationError("Gamma > 0 required")
        if self.S_set is not None:
            if not self.S_set:
                raise ValidationError("S_set must be nonempty")
            if any(n not in (0, 1, 2, 3) for n in self.S_set) or len(set(self.S_set)) != len(self.S_set):
                raise ValidationError("S_set must be a subset of {0,1,2,3}")
        if self.partition is not None:
            p = self.partition
            if any(not (b > a) for a, b in zip(p, p[1:])):
                raise ValidationError("partition must be strictly increasing")
            if p and (p[0] < self.t0 or p[-1] > self.horizon):
                raise ValidationError("partition must lie in [t0, horizon]")
        for key in self.envelopes:
            if key not in ENVELOPE_KEYS:
                raise ValidationError(f"unknown envelope {key!r}")
        for key, value in self.numeric.items():
            if key not in NUMERIC_KEYS:
                raise ValidationError(f"unknown numeric key {key!r}")
            if not value > 0:
                raise ValidationError(f"{key} > 0 required")

    # -- convenience ------------------------------------------------------
    @property
    def coefficients(self) -> tuple[tuple[Expr, ...], ...]:
        return (self.a, self.b, self.c, self.d)

    def replace(self, **changes) -> ProblemSpec:
        return dataclasses.replace(self, **changes)

    @property
    def finite_horizon(self) -> bool:
        return math.isfinite(self.horizon)


def _strip_quotes(value: str) -> str:
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _constant(text: str, key: str, path, line, allow_inf=False) -> float:
    low = text.strip().lower()
    if allow_inf and low in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    try:
        e = parse_expr(text)
    except ExprSyntaxError as exc:
        raise ConfigSyntaxError(f"{key}: {exc}", path, line) from exc
    if not e.is_constant():
        raise ValidationError(f"{key} must be a constant, got {text!r}")
    return e.evaluate(0.0)


def parse_problem_config(text: str, path: str | None = None) -> ProblemSpec:
    """Parse configuration text into a validated :class:`ProblemSpec`."""
    values: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigSyntaxError("unterminated section header", path, lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigSyntaxError(f"unknown section [{section}]", path, lineno)
            continue
        if "=" not in line:
            raise ConfigSyntaxError("expected 'key = value'", path, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigSyntaxError(f"unknown key {key!r}", path, lineno)
        if key in values:
            raise ConfigSyntaxError(f"duplicate key {key!r}", path, lineno)
        values[key] = (_strip_quotes(value), lineno)

    def expr_of(key):
        if key not in values:
            return ZERO
        src, lineno = values[key]
        try:
            return parse_expr(src)
        except ExprSyntaxError as exc:
            raise ConfigSyntaxError(f"{key}: {exc}", path, lineno) from exc

    def real(key, default=None, allow_inf=False):
        if key not in values:
            return default
        src, lineno = values[key]
        return _constant(src, key, path, lineno, allow_inf)

    def real_list(key):
        if key not in values:
            return None
        src, lineno = values[key]
        items = [s for s in (p.strip() for p in src.split(",")) if s]
        return tuple(_constant(s, key, path, lineno) for s in items)

    kwargs = {name: tuple(expr_of(f"{name}{k}") for k in range(4)) for name in COEFF_NAMES}
    if "t0" not in values:
        raise ValidationError("t0 is required")
    if "horizon" not in values:
        raise ValidationError("horizon is required")
    kwargs["t0"] = real("t0")
    kwargs["horizon"] = real("horizon", allow_inf=True)
    kwargs["gamma"] = tuple(real(k, 0.0) for k in GAMMA_KEYS)
    kwargs["epsilon"] = real("epsilon")
    kwargs["Gamma"] = real("Gamma")
    if "S_set" in values:
        src, lineno = values["S_set"]
        try:
            kwargs["S_set"] = tuple(int(s) for s in (p.strip() for p in src.split(",")) if s)
        except ValueError as exc:
            raise ConfigSyntaxError("S_set must be a comma list of integers", path, lineno) from exc
    kwargs["partition"] = real_list("partition")
    kwargs["envelopes"] = {k: expr_of(k) for k in ENVELOPE_KEYS if k in values}
    kwargs["numeric"] = {k: real(k) for k in NUMERIC_KEYS if k in values}
    return ProblemSpec(**kwargs)


def load_problem_config(file) -> ProblemSpec:
    path = Path(file)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"I/O error: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ConfigSyntaxError(f"not UTF-8 ({exc.reason})", str(path)) from exc
    return parse_problem_config(text, str(path))


def _num(x: float) -> str:
    return "inf" if x == math.inf else repr(float(x))


def dump_problem_config(ps: ProblemSpec) -> str:
    """Serialize so that ``parse_problem_config`` reproduces ``ps``."""
    out = ["[problem]"]
    for name in COEFF_NAMES:
        for k, e in enumerate(getattr(ps, name)):
            out.append(f"{name}{k} = {e}")
    out.append(f"t0 = {_num(ps.t0)}")
    out.append(f"horizon = {_num(ps.horizon)}")
    for k, g in enumerate(ps.gamma):
        out.append(f"gamma{k} = {_num(g)}")
    if ps.numeric:
        out.append("")
        out.append("[numeric]")
        for k in NUMERIC_KEYS:
            if k in ps.numeric:
                out.append(f"{k} = {_num(ps.numeric[k])}")
    crit = []
    if ps.epsilon is not None:
        crit.append(f"epsilon = {_num(ps.epsilon)}")
    if ps.Gamma is not None:
        crit.append(f"Gamma = {_num(ps.Gamma)}")
    if ps.S_set is not None:
        crit.append("S_set = " + ", ".join(str(n) for n in ps.S_set))
    if ps.partition is not None:
        crit.append("partition = " + ", ".join(_num(p) for p in ps.partition))
    for k in ENVELOPE_KEYS:
        if k in ps.envelopes:
            crit.append(f"{k} = {ps.envelopes[k]}")
    if crit:
        out.append("")
        out.append("[criterion]")
        out.extend(crit)
    return "\n".join(out) + "\n"


def problem_from_strings(a=("0",) * 4, b=("0",) * 4, c=("0",) * 4, d=("0",) * 4, **kwargs) -> ProblemSpec:
    """Build a ProblemSpec from component source strings (or numbers)."""
    def comps(src):
        return tuple(parse_expr(str(s)) for s in src)

    envelopes = {k: parse_expr(str(v)) for k, v in kwargs.pop("envelopes", {}).items()}
    return ProblemSpec(a=comps(a), b=comps(b), c=comps(c), d=comps(d), envelopes=envelopes, **kwargs)
