"""Exception types shared across the package.

The CLI maps each class to a fixed exit code, so raise the most specific one.
"""


class CoopHuntError(Exception):
    exit_code = 1


class ParameterError(CoopHuntError, ValueError):
    """Invalid model parameters or inputs."""

    exit_code = 2


class ConvergenceError(CoopHuntError, RuntimeError):
    """An iterative solver ran out of budget."""

    exit_code = 3


class DivergenceError(CoopHuntError, ArithmeticError):
    """An orbit or intermediate value became non-finite."""

    exit_code = 3


class RegimeError(CoopHuntError, ValueError):
    """The parameters lie outside the regime an operation is defined for."""

    exit_code = 4
