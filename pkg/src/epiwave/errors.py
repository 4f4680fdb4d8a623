"""Exception types shared across the package.

Two failure families matter to callers: bad model input, which should be
rejected before any numerics run, and numerical breakdown inside an
otherwise well-posed computation. The command line app maps them to
distinct exit codes.
"""


class ValidationError(ValueError):
    """Raised when model data violates a documented precondition."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solve exhausts its budget without converging."""
