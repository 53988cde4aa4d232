"""Exception hierarchy."""

from __future__ import annotations


class CPNError(Exception):
    """Base class for all errors raised by cpnconf."""


class ModelError(CPNError):
    """A model file or model object is malformed."""


class ExpressionSyntaxError(ModelError):
    def __init__(self, message: str, column: int | None = None, token: int | None = None):
        super().__init__(message)
        self.column = column
        self.token = token


class ConfigurationError(ModelError):
    """A priority rule refers to something the place's schema does not have."""


class EvaluationError(CPNError):
    """An arc expression could not be evaluated (unbound variable, bad operand)."""


class DomainError(EvaluationError):
    """A value fell outside its data domain, e.g. a negative natural number."""


class NotEnabledError(CPNError):
    pass


class LogFormatError(CPNError):
    """An event-log file line could not be parsed or violates the schema."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class LogValidationError(CPNError):
    pass


class ModelLogMismatch(CPNError):
    """The log refers to colors or places the model cannot accommodate."""


class InvariantViolation(CPNError):
    """Internal state contradicts a guarantee of conservative-workflow nets."""
