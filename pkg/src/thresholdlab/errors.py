"""Exception hierarchy shared by all modules."""


class ThresholdLabError(Exception):
    """Base class for library errors."""


class InvalidArgumentError(ThresholdLabError, ValueError):
    pass


class OrthonormalityError(ThresholdLabError, ValueError):
    """Manufactured modes whose Gram matrix is not the identity."""

    def __init__(self, pair, value, tol):
        self.pair = pair
        self.value = value
        self.tol = tol
        super().__init__(
            f"modes {pair[0]} and {pair[1]} violate orthonormality: "
            f"Gram entry {value:.3e} off by more than {tol:.1e}"
        )


class QuadratureAccuracyError(ThresholdLabError):
    def __init__(self, last, previous):
        self.last = last
        self.previous = previous
        super().__init__(
            f"quadrature did not converge: last estimates {last!r} and {previous!r}"
        )


class NumericalFailureError(ThresholdLabError, ArithmeticError):
    pass


class GridQualityError(ThresholdLabError, ValueError):
    pass


class DomainError(ThresholdLabError, ValueError):
    pass


class ConfigError(ThresholdLabError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class IterationLimitError(NumericalFailureError):
    """An iterative eigensolver stopped before reaching its tolerance."""

    def __init__(self, message, best_residual=None):
        self.best_residual = best_residual
        super().__init__(message)
