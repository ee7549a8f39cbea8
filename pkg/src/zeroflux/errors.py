"""Exception hierarchy shared by every module of the package."""


class ZeroFluxError(Exception):
    """Base class for all package errors."""


class InvalidMeshError(ZeroFluxError, ValueError):
    pass


class MeshSizeError(InvalidMeshError):
    pass


class InvalidModelError(ZeroFluxError, ValueError):
    pass


class InvalidDataError(ZeroFluxError, ValueError):
    pass


class DomainError(ZeroFluxError, ValueError):
    """An argument lies outside the admissible state or space range."""


class ParameterError(ZeroFluxError, ValueError):
    pass


class ExpressionError(ZeroFluxError, ValueError):
    pass


class ConfigError(ZeroFluxError, ValueError):
    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class ConvergenceError(ZeroFluxError, RuntimeError):
    """Raised when the nonlinear solver stagnates.

    Carries the last residual max-norm, the iteration count and, when the
    failure happened inside a time march, the step index.
    """

    def __init__(self, message, residual, iterations, step=None):
        self.message = message
        self.residual = residual
        self.iterations = iterations
        self.step = step
        prefix = f"step {step}: " if step is not None else ""
        super().__init__(f"{prefix}{message} (residual={residual:.3e}, iterations={iterations})")

    def at_step(self, step):
        return ConvergenceError(self.message, self.residual, self.iterations, step)
