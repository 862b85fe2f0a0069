"""Exception hierarchy for ssclust."""


class SSClustError(Exception):
    """Base class for all errors raised by ssclust."""


class SingularModelError(SSClustError):
    """A covariance matrix is not positive definite after regularization."""

    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


class EmptyComponentError(SSClustError):
    """A mixture component has (numerically) zero effective count."""

    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


class UnderflowError(SSClustError):
    """Every component density underflowed for some observation."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class UndefinedPenaltyError(SSClustError, ValueError):
    """The BIC penalty is undefined (too few unlabeled observations)."""


class InsufficientDataError(SSClustError, ValueError):
    pass


class NoViableModelError(SSClustError):
    """Every candidate in a model search failed."""


class DegenerateTestError(SSClustError, ValueError):
    pass


class DataFormatError(SSClustError, ValueError):
    """Malformed input file or inconsistent dataset."""
