"""Exception hierarchy shared by the pricing modules and the CLI."""


class XvaError(Exception):
    """Base class for all package errors."""


class CurveError(XvaError, ValueError):
    """Invalid term-structure construction or query."""


class ConfigError(XvaError, ValueError):
    """Malformed run configuration.

    ``line`` is the 1-based line number in the config file, when known.
    """

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(XvaError, ArithmeticError):
    """A numerical procedure failed (non-convergence, instability)."""


class PicardConvergenceError(NumericalError):
    def __init__(self, step, time, residual, iterations):
        self.step = step
        self.time = time
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"regime iteration did not converge at step {step} (t={time:.6g}) "
            f"after {iterations} iterations; last max change {residual:.3e}"
        )


class InstabilityError(NumericalError):
    """Non-finite values appeared in a solve."""
