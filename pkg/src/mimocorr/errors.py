"""Exception types raised across the package."""


class MimoCorrError(Exception):
    """Base class for every error raised by mimocorr."""


class InvalidArgumentError(MimoCorrError, ValueError):
    """An argument is outside its documented domain."""


class DegenerateDistributionError(MimoCorrError, ValueError):
    """A power density cannot be normalized."""


class UnsupportedMethodError(MimoCorrError, ValueError):
    """The requested evaluation method does not apply to this input."""


class NumericalFailure(MimoCorrError, ArithmeticError):
    """An iterative numerical routine did not reach its tolerance."""


class NotPositiveSemidefiniteError(NumericalFailure):
    """A matrix that should be PSD has a significantly negative eigenvalue.

    Attributes
    ----------
    eigenvalue : float
        The most negative eigenvalue found.
    """

    def __init__(self, message, eigenvalue):
        super().__init__(message)
        self.eigenvalue = eigenvalue
