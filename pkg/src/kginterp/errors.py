"""Exception types shared across the toolkit."""


class KGInterpError(Exception):
    """Base class for all toolkit errors."""


class ParseError(KGInterpError):
    """Malformed input file. Carries the 1-based line number when known."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ValidationError(KGInterpError):
    """Arguments or state violate an operation's contract."""


class UnknownNameError(KGInterpError, KeyError):
    """Entity or relation surface string not present in the graph."""


class ConflictError(KGInterpError):
    """Write rejected because it would duplicate existing state."""


class NotFoundError(KGInterpError):
    """Referenced object does not exist."""
