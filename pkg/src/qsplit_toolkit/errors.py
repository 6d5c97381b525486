"""Exception hierarchy shared by all modules."""


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(ToolkitError, ValueError):
    """Index out of range or length mismatch."""


class ParameterError(ToolkitError, ValueError):
    """Invalid configuration value."""


class DataError(ToolkitError, ValueError):
    """Dataset unusable for the requested operation (e.g. a single class)."""


class CapacityError(ToolkitError, RuntimeError):
    """Problem too large for the chosen backend, or a search budget ran out."""


class ParseError(ToolkitError, ValueError):
    """Malformed text input; carries the offending line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class QuboParseError(ParseError):
    """Malformed QUBO file."""


class GraphParseError(ParseError):
    """Malformed graph file."""
