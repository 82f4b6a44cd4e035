"""Exception types shared across the package."""


class HodgeGridError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(HodgeGridError, ValueError):
    """A precondition on an argument was violated."""


class InvalidStateError(HodgeGridError, RuntimeError):
    """An operation was requested on an object missing required pieces."""


class SolverError(HodgeGridError, RuntimeError):
    """An iterative solver failed to converge; carries partial diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ParseError(HodgeGridError, ValueError):
    """A structure file record could not be parsed."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class EmptyStructureError(HodgeGridError, ValueError):
    """A structure file yielded zero usable atoms."""


class ResolutionLimitError(HodgeGridError, RuntimeError):
    """Grid refinement hit the configured maximum without meeting the
    component-resolution rule."""


class DataError(HodgeGridError, ValueError):
    """Tabular inputs are inconsistent (id mismatch, bad labels)."""
