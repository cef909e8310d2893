"""
Exception hierarchy for PairTrust.
Library code raises these; the CLI maps them to exit codes.
"""

from typing import Optional


class PairTrustError(Exception):
    """Base class for all PairTrust errors."""

    exit_code = 2


class UsageError(PairTrustError):
    """Bad command-line usage (unknown flag, missing argument)."""

    exit_code = 1


class DomainError(PairTrustError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ConfigError(PairTrustError, ValueError):
    """Invalid configuration (params file, roster, game config)."""


class ProtocolError(PairTrustError, ValueError):
    """A trust game rule was violated.

    Carries the offending field and, when known, the agent or row responsible.
    """

    def __init__(self, message: str, field: Optional[str] = None, agent_id: Optional[str] = None, row: Optional[int] = None):
        super().__init__(message)
        self.field = field
        self.agent_id = agent_id
        self.row = row


class DataFormatError(PairTrustError, ValueError):
    """Malformed input file. Points at the line and column."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[str] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column '{column}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.line = line
        self.column = column


class InsufficientDataError(PairTrustError):
    """Not enough observations for the requested statistic."""


class SingularMatrixError(PairTrustError):
    """Design matrix is rank deficient."""


class NumericError(PairTrustError, ArithmeticError):
    """A non-finite value appeared where the math guarantees a finite one."""

    exit_code = 3
