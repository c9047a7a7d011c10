"""Exception hierarchy shared by every module."""


class SpTuckerError(Exception):
    """Base class for all errors raised by this package."""

    code = "E_GENERIC"


class InvalidArgumentError(SpTuckerError, ValueError):
    code = "E_INVALID"


class ParseError(SpTuckerError, ValueError):
    """Malformed input file. ``line`` is the 1-based line number when known."""

    code = "E_PARSE"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(SpTuckerError, ValueError):
    code = "E_VALIDATION"


class NumericFailure(SpTuckerError, ArithmeticError):
    """A factorization or solve broke down.

    ``mode`` and ``row`` locate the failing factor row (0-based) when the
    failure happened inside a row update.
    """

    code = "E_NUMERIC"

    def __init__(self, message, mode=None, row=None):
        super().__init__(message)
        self.mode = mode
        self.row = row
        self.stats = None
        self.model = None


class ResourceLimitError(SpTuckerError, RuntimeError):
    code = "E_RESOURCE"

    def __init__(self, message):
        super().__init__(message)
        self.stats = None


class InternalConsistencyError(SpTuckerError, RuntimeError):
    code = "E_INTERNAL"
