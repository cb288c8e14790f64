"""
Errors raised by the toolkit.
"""


class QuantLQGError(Exception):
    """The root of every error raised by this package."""
    pass


class SettingsError(QuantLQGError, ValueError):
    """This error is raised when a settings file has unknown or bad keys."""
    pass


class ScenarioError(QuantLQGError, ValueError):
    """The base class for a single violated scenario invariant.

    Args:
        name (str): The scenario field the violation is about.
        message (str): The human readable description.
    """

    def __init__(self, name, message):
        super().__init__(message)
        self.__name = name

    @property
    def name(self):
        """The offending scenario field."""
        return self.__name


class DimensionMismatchError(ScenarioError):
    """This error is raised when matrix dimensions are inconsistent."""
    pass


class NotPSDError(ScenarioError):
    """This error is raised when a matrix is not symmetric PSD (or PD)."""
    pass


class NonpositiveHorizonError(ScenarioError):
    """This error is raised when the horizon is not a positive integer."""
    pass


class MalformedFieldError(ScenarioError):
    """This error is raised when a field is missing or cannot be parsed."""
    pass


class ScenarioValidationError(QuantLQGError, ValueError):
    """This error aggregates every violated scenario invariant.

    Args:
        errors (list): The `ScenarioError` instances found during validation.
    """

    def __init__(self, errors):
        self.__errors = tuple(errors)
        super().__init__(
            'Scenario is invalid: '
            + ' '.join(str(e) for e in self.__errors)
        )

    @property
    def errors(self):
        """The collected violations (tuple of `ScenarioError`)."""
        return self.__errors

    @property
    def names(self):
        """The names of the offending fields, in the order found."""
        return tuple(e.name for e in self.__errors)


class SingularInnerMatrixError(QuantLQGError, ArithmeticError):
    """This error is raised when R + B'P B is numerically singular."""
    pass


class SingularInnovationCovarianceError(QuantLQGError, ArithmeticError):
    """This error is raised when an innovation covariance is singular."""
    pass


class IndexOutOfRangeError(QuantLQGError, IndexError):
    """This error is raised when a time index falls outside the horizon."""
    pass


class TimeDesyncError(QuantLQGError, RuntimeError):
    """This error is raised when a recursive filter is stepped out of turn."""
    pass


class NoCellFoundError(QuantLQGError, LookupError):
    """This error is raised when no quantizer cell contains a point."""
    pass


class PartitionError(QuantLQGError, ValueError):
    """This error is raised when quantizer cells do not partition R^p."""
    pass


class QuadratureNotConvergedError(QuantLQGError, ArithmeticError):
    """This error is raised when cell moments fail to converge.

    Args:
        message (str): The human readable description.
        error_estimate (float): The last change between refinements.
        location (tuple): The `(t, i, j)` triple, when known.
    """

    def __init__(self, message, error_estimate, location=None):
        super().__init__(message)
        self.error_estimate = error_estimate
        self.location = location

    def at(self, t, i, j):
        """Returns a copy of this error tagged with `(t, i, j)`."""
        return QuadratureNotConvergedError(
            f'{self.args[0]} (t={t}, quantizer={i}, cell={j})',
            self.error_estimate,
            (t, i, j)
        )


class UnsupportedDimensionError(QuantLQGError, ValueError):
    """This error is raised for quantizers acting on more than 3 dims."""
    pass


class UnknownCellError(QuantLQGError, LookupError):
    """This error is raised when a message names a cell that is unknown."""
    pass


class DuplicateArrivalError(QuantLQGError, RuntimeError):
    """This error is raised when an origin time is delivered twice."""
    pass


class FutureOriginError(QuantLQGError, RuntimeError):
    """This error is raised when a message claims a future origin."""
    pass


class InstanceTooLargeError(QuantLQGError, ValueError):
    """This error is raised when brute force would enumerate too much."""
    pass


class MissingArtifactError(QuantLQGError, FileNotFoundError):
    """This error is raised when a pipeline artifact is not on disk."""
    pass


class TrialError(QuantLQGError, RuntimeError):
    """This error is raised when one Monte Carlo trial fails.

    Args:
        trial (int): The index of the failing trial.
        cause (Exception): The error raised inside the trial.
    """

    def __init__(self, trial, cause):
        super().__init__(f'Trial {trial} failed: {cause}')
        self.trial = trial
        self.cause = cause
