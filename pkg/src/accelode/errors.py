"""Exception types shared across the package."""


class InvalidSpectrumError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class InvalidBoxError(ValueError):
    pass


class StepSizeError(ValueError):
    """Step size exceeds the bound under which the convergence guarantees hold."""


class StaleStateError(ValueError):
    """A lazy coordinate was asked for a time before its last update."""


class ConfigError(ValueError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (best residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class DivergenceError(ArithmeticError):
    """Raised when an iterate or trajectory state stops being finite.

    ``index`` is the iteration or integration step at which the
    offending state was produced.
    """

    def __init__(self, message, index):
        super().__init__(f"{message} at step {index}")
        self.index = index
