"""Exception hierarchy shared by every pipeline stage."""


class PenpulseError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PenpulseError):
    """A row of an input file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StructuralError(PenpulseError):
    """Input parsed cleanly but violates a structural invariant."""


class ConfigError(PenpulseError):
    """Invalid parameters for a spec object or CLI run."""


class DesignError(ConfigError):
    """A filter cannot be designed from the requested parameters."""


class UsageError(PenpulseError):
    """A function was called with arguments outside its contract."""


class DetectionError(PenpulseError):
    """Beat detection produced too few beats."""


class AlignmentError(PenpulseError):
    """No candidate beat could be matched to the reference."""


class StatisticError(PenpulseError):
    """A statistic is undefined for the given inputs."""


class SweepError(PenpulseError):
    """Every cutoff in a sweep failed detection."""
