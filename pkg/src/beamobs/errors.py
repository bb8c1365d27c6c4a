"""Exception taxonomy shared across the package.

Everything raised on purpose derives from :class:`BeamObsError`, so callers
can catch one type at the boundary (the command line driver does exactly
that).  Configuration problems get their own branch because they map to a
different process exit code.
"""


class BeamObsError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(BeamObsError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class ConfigurationError(BeamObsError):
    """A scenario file or run configuration is invalid.

    Carries an optional ``field`` naming the offending entry.
    """

    def __init__(self, message, field=None):
        if field is not None:
            message = "%s: %s" % (field, message)
        super().__init__(message)
        self.field = field


class NumericRangeError(BeamObsError, ArithmeticError):
    """A computation left the representable floating-point range."""


class SearchRangeError(BeamObsError):
    """A root scan exhausted its interval before finding enough roots."""

    def __init__(self, message, interval=None, found=None):
        super().__init__(message)
        self.interval = interval
        self.found = found


class DegenerateSpectrumError(BeamObsError):
    """The characteristic function grazes zero without a sign change.

    Indicates a (numerically) repeated root; the modal machinery assumes
    simple eigenvalues throughout.
    """


class NotAnEigenvalueError(BeamObsError):
    """The matching system is numerically nonsingular at the given mu."""


class DegenerateModeError(BeamObsError):
    """The matching system has a null space of dimension two or more."""


class DomainError(BeamObsError, ValueError):
    """An abscissa lies outside the beam or at a forbidden location."""


class AmbiguityError(BeamObsError):
    """A two-valued quantity was requested without a side selector.

    The third derivative of an eigenfunction jumps at the attachment
    point, so its value there needs ``side='left'`` or ``side='right'``.
    """


class AccuracyError(BeamObsError):
    """Adaptive quadrature could not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ShapeError(BeamObsError, ValueError):
    """An actuator influence shape violates its support constraints."""


class ConditioningError(BeamObsError):
    """A propagator or linear solve produced non-finite entries."""


class ShiftTooLargeError(BeamObsError):
    """The auxiliary output-space matrix is numerically singular.

    Retry with a smaller spectral shift or fewer modes.
    """


class UndefinedMetricError(BeamObsError):
    """A decay metric is undefined for the given trajectory."""


class InsufficientDataError(BeamObsError):
    """Too few data points for the requested diagnostic."""
