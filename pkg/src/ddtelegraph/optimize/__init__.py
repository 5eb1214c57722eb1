"""Newton-type minimizers used to search pulse timings."""

from .damped_newton import DampedNewton  # noqa: F401
from .solver_newton import NewtonSolver  # noqa: F401
