"""Exception hierarchy shared by every module."""


class SplittingError(Exception):
    """Base class for all errors raised by rsplit."""


class DimensionError(SplittingError, ValueError):
    """Vectors or matrices of incompatible shape."""


class ParameterError(SplittingError, ValueError):
    """A scalar parameter lies outside its admissible range."""


class DomainError(SplittingError):
    """A resolvent or prox is not defined (or not single-valued) at the input."""


class NotPositiveDefiniteError(SplittingError, ValueError):
    """Cholesky factorization failed."""


class InfeasibleError(ParameterError):
    """Operator moduli admit no valid splitting (alpha + beta <= -1/omega)."""


class GammaIncompatibleError(ParameterError):
    """The step gamma makes 1 + gamma*sigma or 1 + gamma*tau nonpositive."""

    def __init__(self, message, gamma_bound=None):
        super().__init__(message)
        self.gamma_bound = gamma_bound


class ConfigError(ParameterError):
    """A splitting configuration violates one or more admissibility constraints."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid splitting configuration: {lines}")
