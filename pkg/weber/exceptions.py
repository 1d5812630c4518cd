"""Error types raised by the solver toolkit."""
from typing import Any, List, Optional


class WeberError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(WeberError, ValueError):
    """Input data has the wrong shape or contains non-finite values."""


class InvalidParameterError(WeberError, ValueError):
    """A numeric parameter is outside its admissible range."""


class SizeGuardError(WeberError, ValueError):
    """Brute-force enumeration refused because the instance is too large."""


class ParseError(WeberError, ValueError):
    """A data or config file could not be parsed.

    Args:
        message: Human readable description
        path: File the error was found in
        row: 1-based row/line number, when known
        column: 1-based column number or field path, when known
    """

    def __init__(self, message: str, path: Optional[str] = None,
                 row: Optional[int] = None, column: Any = None):
        self.path = path
        self.row = row
        self.column = column
        location = []
        if path:
            location.append(str(path))
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        prefix = f"{', '.join(location)}: " if location else ''
        super().__init__(f"{prefix}{message}")


class SolverDivergedError(WeberError, RuntimeError):
    """The objective became non-finite; carries the trace collected so far."""

    def __init__(self, message: str, trace: Optional[List[Any]] = None):
        super().__init__(message)
        self.trace = list(trace or [])


class ConvergenceError(WeberError, RuntimeError):
    """An inner solver hit its iteration cap before reaching tolerance."""
