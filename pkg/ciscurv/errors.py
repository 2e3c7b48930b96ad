"""Exception hierarchy shared by every ciscurv module."""

from typing import Any, Dict, List, Optional


class CiscurvError(Exception):
    """Base exception for ciscurv errors."""

    pass


class InvalidArgumentError(CiscurvError, ValueError):
    """Argument outside the domain of an operation."""

    pass


class DegenerateGermError(CiscurvError):
    """Germ whose differential is not surjective or whose base point is off the zero set."""

    pass


class DegenerateInputError(CiscurvError):
    """Input that makes a construction meaningless (constant disk map, empty data)."""

    pass


class ScheduleError(CiscurvError):
    """Epsilon schedule violating one of the globalization inequalities."""

    pass


class InputParseError(CiscurvError):
    """Malformed input file.

    Attributes:
        path: File that failed to parse.
        line: 1-based line of the failure, if known.
        column: 1-based column of the failure, if known.
    """

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        super().__init__(message)
        self.path = path
        self.line = line
        self.column = column

    @property
    def location(self) -> Dict[str, Any]:
        """Location of the failure as a JSON-ready dict."""
        return {"path": self.path, "line": self.line, "column": self.column}


def raise_collected(errors: List[str], header: str) -> None:
    """Raise a single InvalidArgumentError listing every collected problem.

    Args:
        errors: Problems found during validation.
        header: First line of the error message.

    Raises:
        InvalidArgumentError: If errors is non-empty.
    """
    if errors:
        raise InvalidArgumentError(header + ":\n" + "\n".join(f"  - {e}" for e in errors))
