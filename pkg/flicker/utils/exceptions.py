#!/usr/bin/env python
"""Errors and exceptions

Every error raised on purpose by flicker derives from :class:`FlickerError`
and carries the process exit code the command line reports for it.
"""

from typing import Optional


class FlickerError(Exception):
    """Base class for flicker errors"""

    exit_code: int = 1


class ValidationError(FlickerError, ValueError):
    """Raised when a distribution, matrix, partition, graph or file is malformed"""

    exit_code = 2


class ParseError(ValidationError):
    """Raised when an input file cannot be parsed.

    Args:
        message (str): What went wrong
        path (str, optional): File being read
        line (int, optional): 1-based line number of the offending record
    """

    def __init__(
        self, message: str, path: Optional[str] = None, line: Optional[int] = None
    ):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(f"{where}{message}")


class SearchRefusedError(ValidationError):
    """Raised when an exhaustive partition search is requested for too many states"""


class UndefinedConditionalError(FlickerError):
    """Raised when a quantity conditions on an event of zero probability"""

    exit_code = 3


class UndefinedRealizationError(UndefinedConditionalError):
    """Raised when a local decomposition is requested for an impossible transition"""

    marker = "undefined-realization"

    def __init__(self, message: str):
        super().__init__(f"{self.marker}: {message}")


class DomainError(FlickerError, ArithmeticError):
    """Raised when a normalised quantity is undefined (e.g. effectiveness of one state)"""

    exit_code = 3


class DivergenceError(FlickerError):
    """Raised when the stationary iteration does not converge

    Args:
        message (str): What went wrong
        residual (float): L1 residual of the last iterate
    """

    exit_code = 3

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3e})")
