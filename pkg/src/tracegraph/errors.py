"""Exception types shared across the package."""


class TraceGraphError(Exception):
    """Base class for all tracegraph errors."""


class ParseError(TraceGraphError):
    """A raw trace line could not be parsed.

    Carries the 1-based line number of the offending line.
    """

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ValidationError(TraceGraphError):
    """Structurally invalid input (duplicate ids, impossible timestamps, ...)."""


class SolverError(TraceGraphError):
    """The LP solver failed to produce a verified solution."""
