from .base import DomainError


class InputError(DomainError):
    pass


class DomainViolationError(DomainError):
    pass


class ConfigError(DomainError):
    pass


class ModelError(DomainError):
    pass


class ConsistencyError(DomainError):
    pass


class AcceptanceError(DomainError):
    pass


class ResampleSignal(DomainError):
    """A measure-zero uniform variate reached an inversion; draw again."""
    pass


class SkipSignal(DomainError):
    """The requested bound or test is not claimed for this input."""
    pass
