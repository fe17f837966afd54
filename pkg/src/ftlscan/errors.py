"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class UnsupportedConfigurationError(InvalidArgumentError):
    """The operation is not defined for this configuration (e.g. wrong number of boxes)."""


class InfeasibleConfigError(InvalidArgumentError):
    """Strategy B is undefined because the feasibility inequalities fail."""


class SingularStageError(ArithmeticError):
    """The leading coefficient of a stage ODE vanishes on the stage interval."""


class NonConvergenceError(RuntimeError):
    """A simulation exceeded its step budget without stopping."""
