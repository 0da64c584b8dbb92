"""Exception types shared across the package."""


class GradPathError(Exception):
    """Base class for all package errors."""


class InputError(GradPathError, ValueError):
    """A precondition on user-supplied input was violated."""


class ComputationError(GradPathError, RuntimeError):
    """A numerical routine failed at runtime."""


class DivergenceError(ComputationError):
    """A trajectory left the divergence guard radius."""


class NonFiniteError(ComputationError):
    """A non-finite objective value or gradient was encountered."""


class StepSizeUnderflowError(ComputationError):
    """The adaptive integrator could not make progress (stiffness)."""

    def __init__(self, t: float):
        self.t = t
        super().__init__(f"step size underflow at t={t!r}")


class QuadratureError(ComputationError):
    """Adaptive quadrature did not converge within the subdivision limit."""


class InvariantViolation(GradPathError):
    """A runtime invariant (e.g. a bound sandwich) was violated."""
