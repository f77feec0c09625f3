"""Exception types shared across the simulator."""


class VdsaError(Exception):
    """Base class for all simulator errors."""


class PositionOutsideMap(VdsaError):
    """Query position falls outside the REM grid extent."""


class UnknownChannel(VdsaError):
    """Channel index not present in the REM."""


class ParseError(VdsaError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class InvariantViolation(VdsaError):
    """A loaded record violates a structural invariant."""


class DegenerateGeometry(VdsaError):
    """Transmitter and receiver positions coincide."""


class DomainError(VdsaError):
    """Argument outside the mathematical domain of an operation."""


class InfeasibleSensing(VdsaError):
    """Requested (P_fa, P_d) pair unattainable at the given SINR."""


class EmptyCandidateSet(VdsaError):
    """Allocator called with no candidate frequencies."""


class ConfigError(VdsaError):
    """Invalid or inconsistent simulation configuration."""


class NoData(VdsaError):
    """Metric requested for a key with no recorded samples."""
