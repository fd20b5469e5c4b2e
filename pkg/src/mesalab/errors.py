"""Exception hierarchy shared by every module."""


class MesaLabError(Exception):
    """Base class for all package errors."""


class ConfigError(MesaLabError, ValueError):
    """Invalid run/grid/model configuration."""


class DomainError(MesaLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(MesaLabError, ValueError):
    """A model exponent is outside its admissible range."""


class NumericalError(MesaLabError, RuntimeError):
    """Non-finite values or a real instability detected while marching."""


class CFLViolation(NumericalError):
    """A time step exceeded the explicit stability bound."""


class ParseError(MesaLabError, ValueError):
    """Malformed field file."""


class UsageError(MesaLabError, ValueError):
    """Operation called with inconsistent inputs (e.g. misaligned runs)."""


class StudyError(MesaLabError, RuntimeError):
    """A run inside a parameter study failed; carries the parameter value."""

    def __init__(self, param, cause):
        super().__init__(f"run failed at parameter {param!r}: {cause}")
        self.param = param
        self.cause = cause
