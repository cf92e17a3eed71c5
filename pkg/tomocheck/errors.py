"""Exceptions raised by tomocheck.

Every failure the toolkit can diagnose is a ``TomoCheckError``; the CLI turns
these into exit code 1 after logging the message.
"""


class TomoCheckError(Exception):
    """Base class for all tomocheck errors."""


class ConfigError(TomoCheckError):
    pass


class SchemaVersionError(TomoCheckError):
    pass


class InvalidStateError(TomoCheckError):
    """Unphysical or malformed state parameters."""


class InvalidModeError(TomoCheckError):
    pass


class OutOfDomainError(TomoCheckError):
    """A point lies outside a grid's axes."""


class DegreeOverflowError(TomoCheckError):
    pass


class DegenerateFormError(TomoCheckError):
    """Quadrature form with all coefficients zero."""


class SingularConfigurationError(TomoCheckError):
    """A phase configuration gives a (numerically) singular linear system."""

    def __init__(self, message, phases=(), condition_number=float("inf")):
        super().__init__(message)
        self.phases = tuple(phases)
        self.condition_number = condition_number


class MissingDataError(TomoCheckError):
    """A required (mode, phase) group or joint pair is not available."""


class InsufficientRecordsError(MissingDataError):
    pass


class EmptyScheduleError(TomoCheckError):
    pass


class WindowAdmissionError(TomoCheckError):
    pass


class ImaginaryResidueError(TomoCheckError):
    pass


class InternalConsistencyError(TomoCheckError):
    pass


class InvalidOperatorError(TomoCheckError):
    pass
