"""Exception hierarchy.

Two families matter to callers: ``InputError`` (bad configuration, bad
expression, violated precondition) and ``NumericalError`` (integration or
quadrature could not deliver).  The CLI maps them to exit codes 2 and 3.
"""

from __future__ import annotations


class QRiccatiError(Exception):
    """Base class for every error raised by this package."""


class InputError(QRiccatiError):
    pass


class NumericalError(QRiccatiError):
    pass


class ExprSyntaxError(InputError):
    """Expression text does not match the grammar."""

    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset(),
                 source: str | None = None):
        self.offset = offset
        self.expected = frozenset(expected)
        self.source = source
        detail = f"{message} at byte offset {offset}"
        if self.expected:
            detail += " (expected one of: " + ", ".join(sorted(self.expected)) + ")"
        super().__init__(detail)


class ConfigSyntaxError(InputError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(f"syntax error: {where}{message}")


class ValidationError(InputError):
    """A ProblemSpec (or other input) invariant is violated."""

    def __init__(self, invariant: str):
        self.invariant = invariant
        super().__init__(f"validation error: {invariant}")


class PreconditionError(InputError):
    """An operation was called outside its stated domain."""


class EnvelopeError(PreconditionError):
    """Envelope functions do not have the required signs."""


class SymbolPatternError(InputError):
    """A 4x4 matrix is not the symbol of a quaternion."""

    def __init__(self, entry_a: tuple[int, int], entry_b: tuple[int, int], deviation: float):
        self.entry_a = entry_a
        self.entry_b = entry_b
        self.deviation = deviation
        super().__init__(
            f"not a quaternion symbol: entries {entry_a} and {entry_b} "
            f"break the sign pattern (deviation {deviation:.3g})")


class ZeroDivisorError(ArithmeticError, QRiccatiError):
    """Inverse of the zero quaternion requested."""


class ExprDomainError(NumericalError):
    """Evaluation left the real domain (ln, sqrt, division, overflow)."""

    def __init__(self, node: str, t: float, reason: str):
        self.node = node
        self.t = t
        self.reason = reason
        super().__init__(f"domain error: {reason} in '{node}' at t={t!r}")


class IntegrationError(NumericalError):
    pass


class QuadratureError(NumericalError):
    pass


class UnboundedBracketError(NumericalError):
    """The bracket ratio of the sign-changing criterion is unbounded."""

    def __init__(self, t: float, value: float):
        self.t = t
        self.value = value
        super().__init__(f"condition 5): bracket ratio unbounded (|{value:.3g}| > 1e12) at t={t!r}")
