"""Exception hierarchy shared across the package."""

from __future__ import annotations


class QMTError(Exception):
    """Base class for all errors raised by gaugeqmt."""


class ContractError(QMTError, ValueError):
    """A precondition of an operation was violated (grid mismatch, bad argument)."""


class NumericalError(QMTError, ArithmeticError):
    """A computation produced non-finite values or breached a residual tolerance."""


class ExprError(QMTError, ValueError):
    """Base class for expression-language errors."""


class ExprSyntaxError(ExprError):
    """Malformed expression text.

    Attributes:
        position: zero-based character offset of the offending token.
    """

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at offset {position}")


class UnknownIdentifierError(ExprError):
    """An identifier is neither x, y, pi, a function, nor a declared parameter."""

    def __init__(self, name: str, position: int | None = None):
        self.name = name
        self.position = position
        where = "" if position is None else f" at offset {position}"
        super().__init__(f"unknown identifier {name!r}{where}")


class UnboundParameterError(ExprError):
    """A parameter referenced by an expression has no value at evaluation time."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"parameter {name!r} is not bound")


class GaugeError(QMTError, ValueError):
    """Inconsistent gauge phase or connection."""


class ConfigError(QMTError, ValueError):
    """Invalid run configuration."""
