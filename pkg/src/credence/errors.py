"""Exception hierarchy shared across the package.

Two families matter for the CLI exit-code contract: ``InputError`` maps to
exit code 2 (bad files, bad features, bad config), ``NumericalError`` maps
to exit code 1 (a fit or downstream computation failed).
"""


class CredenceError(Exception):
    """Base class for all package errors."""


class InputError(CredenceError):
    """User-supplied data or arguments are invalid."""


class ParseError(InputError):
    """CSV/config parsing failure; carries a row/line index when known."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class MissingColumn(InputError):
    pass


class EmptyDataset(InputError):
    pass


class RangeError(InputError):
    """A value is outside its documented domain (e.g. outcome not in [0, 1])."""


class DomainError(InputError):
    """Argument outside a mathematical function's domain (e.g. quantile at 0)."""


class DimensionMismatch(InputError):
    pass


class ConstantPredictor(InputError):
    """A non-intercept column has zero sample variance."""


class NumericalError(CredenceError):
    """A numerical routine could not produce a valid result."""


class NotPositiveDefinite(NumericalError):
    """Cholesky pivot <= 0; signals separation or a singular design."""


class NonConvergence(NumericalError):
    pass


class Separation(NumericalError):
    """The unpenalised MLE diverges; a shrinkage prior (jeffreys/logf) is
    the usual remedy."""


class RankDeficient(NumericalError):
    pass


class SlopeUndefined(NumericalError):
    """Calibration slope requested for constant predictions."""


class DegenerateDistribution(NumericalError):
    """Density requested for a zero-variance linear predictor."""


class IdentityLinkOutOfRange(NumericalError):
    """Identity-link projection left the (0, 1) probability range."""


class UndefinedMetric(NumericalError):
    """Metric undefined for the given reference (e.g. zero prevalence)."""
