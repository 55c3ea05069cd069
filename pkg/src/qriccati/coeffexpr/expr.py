"""Immutable expression trees in the single variable ``t``.

Trees are built from frozen dataclasses, so structural equality and hashing
come for free.  Evaluation goes through :meth:`Expr.compile`, which generates
a Python function once per tree; the tree walk is never repeated inside an
integration loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ExprDomainError

FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "abs", "tanh", "atan")
NAMED_CONSTANTS = {"pi": math.pi, "e": math.e}


class Expr:
    """Base class; see the concrete node types below."""

    __slots__ = ()

    # ---- evaluation -----------------------------------------------------
    def __call__(self, t):
        return self.evaluate(t)

    def evaluate(self, t):
        """Evaluate at a float or an ndarray of times.

        Domain violations raise :class:`ExprDomainError`; NaN is never
        returned.
        """
        if isinstance(t, np.ndarray):
            return _compiled_array(self)(t)
        return _compiled_scalar(self)(float(t))

    def compile(self) -> Callable[[float], float]:
        return _compiled_scalar(self)

    # ---- structure ------------------------------------------------------
    def children(self) -> tuple[Expr, ...]:
        return ()

    def walk(self):
        yield self
        for c in self.children():
            yield from c.walk()

    def contains_abs(self) -> bool:
        return any(isinstance(n, Func) and n.name == "abs" for n in self.walk())

    def is_constant(self) -> bool:
        return not any(isinstance(n, Var) for n in self.walk())

    def depth(self) -> int:
        kids = self.children()
        return 1 + (max(c.depth() for c in kids) if kids else 0)

    # ---- printing -------------------------------------------------------
    prec = 100  # atoms

    def __str__(self) -> str:
        return self._fmt()

    def _fmt(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))

    def _fmt(self):
        v = self.value
        if v < 0:
            return "(" + repr(v) + ")"
        if v == int(v) and abs(v) < 1e16:
            return str(int(v))
        return repr(v)

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True)
class Var(Expr):
    def _fmt(self):
        return "t"

    def __repr__(self):
        return "t"


@dataclass(frozen=True)
class NamedConst(Expr):
    name: str

    @property
    def value(self) -> float:
        return NAMED_CONSTANTS[self.name]

    def _fmt(self):
        return self.name

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr

    def children(self):
        return (self.arg,)

    def _fmt(self):
        return f"{self.name}({self.arg._fmt()})"

    def __repr__(self):
        return f"{self.name.capitalize()}({self.arg!r})"


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    prec = 3

    def children(self):
        return (self.arg,)

    def _fmt(self):
        # operand of unary minus sits at the unary level: atoms, Pow, Neg
        return "-" + _wrap(self.arg, 3)

    def __repr__(self):
        return f"Neg({self.arg!r})"


@dataclass(frozen=True)
class BinOp(Expr):
    left: Expr
    right: Expr
    op = "?"

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"{type(self).__name__}({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Add(BinOp):
    op = "+"
    prec = 1

    def _fmt(self):
        return f"{_wrap(self.left, 1)} + {_wrap(self.right, 2)}"


@dataclass(frozen=True, repr=False)
class Sub(BinOp):
    op = "-"
    prec = 1

    def _fmt(self):
        return f"{_wrap(self.left, 1)} - {_wrap(self.right, 2)}"


@dataclass(frozen=True, repr=False)
class Mul(BinOp):
    op = "*"
    prec = 2

    def _fmt(self):
        return f"{_wrap(self.left, 2)} * {_wrap(self.right, 3)}"


@dataclass(frozen=True, repr=False)
class Div(BinOp):
    op = "/"
    prec = 2

    def _fmt(self):
        return f"{_wrap(self.left, 2)} / {_wrap(self.right, 3)}"


@dataclass(frozen=True, repr=False)
class Pow(BinOp):
    op = "^"
    prec = 4

    def _fmt(self):
        # base must be a primary; exponent sits at the unary level
        return f"{_wrap(self.left, 100)}^{_wrap(self.right, 3)}"


@dataclass(frozen=True)
class Sign(Expr):
    """sign(u) with sign(0) = 0.  Only produced by differentiating abs; it is
    not part of the input grammar."""

    arg: Expr

    def children(self):
        return (self.arg,)

    def _fmt(self):
        return f"sgn({self.arg._fmt()})"

    def __repr__(self):
        return f"Sign({self.arg!r})"


def _wrap(e: Expr, min_prec: int) -> str:
    s = e._fmt()
    if isinstance(e, Const) and e.value < 0:
        return s  # already parenthesised
    return s if e.prec >= min_prec else f"({s})"


T = Var()
ZERO = Const(0.0)
ONE = Const(1.0)


def const(v: float) -> Expr:
    """Constant node; negative values become ``Neg(Const(|v|))`` so that
    the printed form re-parses to the same tree."""
    v = float(v)
    return Neg(Const(-v)) if v < 0 else Const(v)


def const_value(e: Expr) -> float | None:
    """Numeric value of a literal (``Const``/``NamedConst``/``Neg`` of one)."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, NamedConst):
        return e.value
    if isinstance(e, Neg):
        inner = const_value(e.arg)
        return None if inner is None else -inner
    return None


# ---------------------------------------------------------------------------
# compilation
# ---------------------------------------------------------------------------

def _domain(node, t, reason):
    raise ExprDomainError(str(node), float(t), reason)


def _s_ln(x, t, node):
    if x <= 0.0:
        _domain(node, t, "ln of nonpositive")
    return math.log(x)


def _s_sqrt(x, t, node):
    if x < 0.0:
        _domain(node, t, "sqrt of negative")
    return math.sqrt(x)


def _s_div(x, y, t, node):
    if y == 0.0:
        _domain(node, t, "division by zero")
    return x / y


def _s_pow(x, y, t, node):
    try:
        r = x ** y
    except ZeroDivisionError:
        _domain(node, t, "zero to a negative power")
    except OverflowError:
        _domain(node, t, "overflow")
    if isinstance(r, complex):
        _domain(node, t, "negative base with non-integer exponent")
    return r


def _s_exp(x, t, node):
    try:
        return math.exp(x)
    except OverflowError:
        _domain(node, t, "overflow")


def _s_sign(x):
    return float((x > 0) - (x < 0))


def _first_bad(mask, t):
    idx = int(np.argmax(mask))
    return t[idx] if np.ndim(t) else t


def _a_ln(x, t, node):
    bad = x <= 0.0
    if np.any(bad):
        _domain(node, _first_bad(np.broadcast_to(bad, np.shape(t)), t), "ln of nonpositive")
    return np.log(x)


def _a_sqrt(x, t, node):
    bad = x < 0.0
    if np.any(bad):
        _domain(node, _first_bad(np.broadcast_to(bad, np.shape(t)), t), "sqrt of negative")
    return np.sqrt(x)


def _a_div(x, y, t, node):
    bad = y == 0.0
    if np.any(bad):
        _domain(node, _first_bad(np.broadcast_to(bad, np.shape(t)), t), "division by zero")
    return x / y


def _a_pow(x, y, t, node):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    neg = (x < 0.0) & (y != np.round(y))
    if np.any(neg):
        _domain(node, _first_bad(np.broadcast_to(neg, np.shape(t)), t),
                "negative base with non-integer exponent")
    zero = (x == 0.0) & (y < 0.0)
    if np.any(zero):
        _domain(node, _first_bad(np.broadcast_to(zero, np.shape(t)), t), "zero to a negative power")
    with np.errstate(over="ignore"):
        r = np.power(x, y)
    return _a_finite(r, t, node)


def _a_exp(x, t, node):
    with np.errstate(over="ignore"):
        return _a_finite(np.exp(x), t, node)


def _a_finite(r, t, node):
    bad = ~np.isfinite(r)
    if np.any(bad):
        _domain(node, _first_bad(np.broadcast_to(bad, np.shape(t)), t), "overflow")
    return r


_SCALAR_ENV = {
    "_ln": _s_ln, "_sqrt": _s_sqrt, "_div": _s_div, "_pow": _s_pow, "_exp": _s_exp,
    "_sin": math.sin, "_cos": math.cos, "_tan": math.tan, "_abs": abs,
    "_tanh": math.tanh, "_atan": math.atan, "_sgn": _s_sign,
}
_ARRAY_ENV = {
    "_ln": _a_ln, "_sqrt": _a_sqrt, "_div": _a_div, "_pow": _a_pow, "_exp": _a_exp,
    "_sin": np.sin, "_cos": np.cos, "_tan": np.tan, "_abs": np.abs,
    "_tanh": np.tanh, "_atan": np.arctan, "_sgn": np.sign,
}
_CHECKED = {"ln", "sqrt", "exp"}


def _emit(e: Expr, nodes: list) -> str:
    """Python source for ``e``; ``nodes`` collects nodes referenced by checks."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, NamedConst):
        return repr(e.value)
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Neg):
        return f"(-{_emit(e.arg, nodes)})"
    if isinstance(e, Sign):
        return f"_sgn({_emit(e.arg, nodes)})"
    if isinstance(e, Func):
        a = _emit(e.arg, nodes)
        if e.name in _CHECKED:
            nodes.append(e)
            return f"_{e.name}({a}, t, _n[{len(nodes) - 1}])"
        return f"_{e.name}({a})"
    if isinstance(e, (Add, Sub, Mul)):
        return f"({_emit(e.left, nodes)} {e.op} {_emit(e.right, nodes)})"
    if isinstance(e, Div):
        a, b = _emit(e.left, nodes), _emit(e.right, nodes)
        nodes.append(e)
        return f"_div({a}, {b}, t, _n[{len(nodes) - 1}])"
    if isinstance(e, Pow):
        a, b = _emit(e.left, nodes), _emit(e.right, nodes)
        nodes.append(e)
        return f"_pow({a}, {b}, t, _n[{len(nodes) - 1}])"
    raise TypeError(f"unknown node {e!r}")


def _build(e: Expr, env: dict, array: bool):
    nodes: list = []
    body = _emit(e, nodes)
    scope = dict(env)
    scope["_n"] = tuple(nodes)
    if array:
        src = f"def _f(t):\n    return _fin(t, {body}, _root)\n"
        scope["_fin"] = _array_result
    else:
        src = f"def _f(t):\n    return _fin(t, {body}, _root)\n"
        scope["_fin"] = _scalar_result
    scope["_root"] = e
    exec(compile(src, f"<expr {str(e)[:60]}>", "exec"), scope)  # noqa: S102
    return scope["_f"]


def _scalar_result(t, r, root):
    r = float(r)
    if not math.isfinite(r):
        _domain(root, t, "non-finite result")
    return r


def _array_result(t, r, root):
    r = np.broadcast_to(np.asarray(r, dtype=float), np.shape(t)).copy()
    return _a_finite(r, t, root)


_SCALAR_CACHE: dict = {}
_ARRAY_CACHE: dict = {}


def _compiled_scalar(e: Expr):
    f = _SCALAR_CACHE.get(e)
    if f is None:
        f = _SCALAR_CACHE[e] = _build(e, _SCALAR_ENV, array=False)
    return f


def _compiled_array(e: Expr):
    f = _ARRAY_CACHE.get(e)
    if f is None:
        f = _ARRAY_CACHE[e] = _build(e, _ARRAY_ENV, array=True)
    return f


def compile_many(exprs) -> Callable[[float], tuple]:
    """One generated function returning a tuple of all values at ``t``.

    Used by the right-hand-side builders: a single call per stage evaluates
    all sixteen coefficients.
    """
    exprs = tuple(exprs)
    nodes: list = []
    bodies = [_emit(e, nodes) for e in exprs]
    scope = dict(_SCALAR_ENV)
    scope["_n"] = tuple(nodes)
    src = "def _f(t):\n    return (" + ", ".join(bodies) + (",)" if len(bodies) == 1 else ")") + "\n"
    exec(compile(src, "<coefficients>", "exec"), scope)  # noqa: S102
    return scope["_f"]


# ---------------------------------------------------------------------------
# differentiation and simplification
# ---------------------------------------------------------------------------

def diff(e: Expr) -> Expr:
    """Symbolic d/dt of ``e`` followed by :func:`simplify`."""
    return simplify(_d(e))


def _d(e: Expr) -> Expr:
    if isinstance(e, (Const, NamedConst)):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return Neg(_d(e.arg))
    if isinstance(e, Add):
        return Add(_d(e.left), _d(e.right))
    if isinstance(e, Sub):
        return Sub(_d(e.left), _d(e.right))
    if isinstance(e, Mul):
        u, v = e.left, e.right
        return Add(Mul(_d(u), v), Mul(u, _d(v)))
    if isinstance(e, Div):
        u, v = e.left, e.right
        return Div(Sub(Mul(_d(u), v), Mul(u, _d(v))), Pow(v, Const(2)))
    if isinstance(e, Pow):
        u, v = e.left, e.right
        if v.is_constant():
            # d(u^c) = c u^(c-1) u'
            return Mul(Mul(v, Pow(u, Sub(v, ONE))), _d(u))
        # general case needs u > 0: d(u^v) = u^v (v' ln u + v u'/u)
        return Mul(e, Add(Mul(_d(v), Func("ln", u)), Div(Mul(v, _d(u)), u)))
    if isinstance(e, Func):
        u = e.arg
        du = _d(u)
        name = e.name
        if name == "sin":
            outer = Func("cos", u)
        elif name == "cos":
            outer = Neg(Func("sin", u))
        elif name == "tan":
            outer = Add(ONE, Pow(Func("tan", u), Const(2)))
        elif name == "exp":
            outer = e
        elif name == "ln":
            return Div(du, u)
        elif name == "sqrt":
            return Div(du, Mul(Const(2), e))
        elif name == "abs":
            outer = Sign(u)
        elif name == "tanh":
            outer = Sub(ONE, Pow(Func("tanh", u), Const(2)))
        elif name == "atan":
            return Div(du, Add(ONE, Pow(u, Const(2))))
        else:
            raise TypeError(name)
        return Mul(outer, du)
    if isinstance(e, Sign):
        return ZERO
    raise TypeError(f"unknown node {e!r}")


def simplify(e: Expr) -> Expr:
    """Constant folding plus 0/1 identities, bottom-up."""
    if isinstance(e, (Const, Var, NamedConst)):
        return e
    if isinstance(e, Neg):
        a = simplify(e.arg)
        v = const_value(a)
        if v is not None and not isinstance(a, NamedConst):
            return const(-v)
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if isinstance(e, Sign):
        a = simplify(e.arg)
        v = const_value(a)
        if v is not None:
            return const(float(_s_sign(v)))
        return Sign(a)
    if isinstance(e, Func):
        a = simplify(e.arg)
        v = const_value(a)
        if v is not None and isinstance(a, (Const, Neg)):
            folded = _try_fold(Func(e.name, a))
            if folded is not None:
                return folded
        return Func(e.name, a)
    if isinstance(e, BinOp):
        a, b = simplify(e.left), simplify(e.right)
        va, vb = _literal(a), _literal(b)
        if va is not None and vb is not None:
            folded = _try_fold(type(e)(a, b))
            if folded is not None:
                return folded
        if isinstance(e, Add):
            if va == 0.0:
                return b
            if vb == 0.0:
                return a
            if isinstance(b, Neg):
                return Sub(a, b.arg)
        elif isinstance(e, Sub):
            if vb == 0.0:
                return a
            if va == 0.0:
                return simplify(Neg(b))
            if isinstance(b, Neg):
                return Add(a, b.arg)
            if a == b:
                return ZERO
        elif isinstance(e, Mul):
            if va == 0.0 or vb == 0.0:
                return ZERO
            if va == 1.0:
                return b
            if vb == 1.0:
                return a
            if va == -1.0:
                return simplify(Neg(b))
            if vb == -1.0:
                return simplify(Neg(a))
            if isinstance(a, Neg) and isinstance(b, Neg):
                return simplify(Mul(a.arg, b.arg))
        elif isinstance(e, Div):
            if va == 0.0 and vb != 0.0:
                return ZERO
            if vb == 1.0:
                return a
        elif isinstance(e, Pow):
            if vb == 0.0:
                return ONE
            if vb == 1.0:
                return a
            if va == 1.0:
                return ONE
        return type(e)(a, b)
    raise TypeError(f"unknown node {e!r}")


def _literal(e: Expr) -> float | None:
    # NamedConst is kept symbolic so that "pi" survives folding in printing
    if isinstance(e, NamedConst):
        return None
    return const_value(e)


def _try_fold(e: Expr) -> Expr | None:
    try:
        v = _compiled_scalar(e)(0.0)
    except (ExprDomainError, OverflowError, ValueError, ZeroDivisionError):
        return None
    if not math.isfinite(v):
        return None
    return const(v)


# ---------------------------------------------------------------------------
# tree rewriting helpers
# ---------------------------------------------------------------------------

def substitute(e: Expr, replacement: Expr) -> Expr:
    """Replace every occurrence of ``t`` by ``replacement``."""
    if isinstance(e, Var):
        return replacement
    if isinstance(e, (Const, NamedConst)):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, replacement))
    if isinstance(e, Sign):
        return Sign(substitute(e.arg, replacement))
    if isinstance(e, Func):
        return Func(e.name, substitute(e.arg, replacement))
    if isinstance(e, BinOp):
        return type(e)(substitute(e.left, replacement), substitute(e.right, replacement))
    raise TypeError(f"unknown node {e!r}")


def abs_arguments(e: Expr) -> list[Expr]:
    return [n.arg for n in e.walk() if isinstance(n, Func) and n.name == "abs"]


def linear_combination(terms) -> Expr:
    """Simplified ``sum(c * e for c, e in terms)`` with float coefficients."""
    acc: Expr = ZERO
    for c, e in terms:
        if c == 0.0:
            continue
        piece = e if c == 1.0 else Neg(e) if c == -1.0 else Mul(const(c), e)
        acc = Add(acc, piece)
    return simplify(acc)
