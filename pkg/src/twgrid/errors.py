"""Exception and warning types raised across the package."""


class OutOfBounds(ValueError):
    """A point or cell lies outside the grid extent."""


class OverlappingClasses(ValueError):
    """A cell was given more than one fixed class."""


class NoPath(RuntimeError):
    """Following the index matrix did not reach the goal."""


class InvalidStart(ValueError):
    """Path extraction was asked to start inside an obstacle."""


class SingularPotential(ValueError):
    """The potential force is undefined because phi is (numerically) 1."""


class SingularInnovation(ArithmeticError):
    """The Kalman innovation covariance cannot be inverted."""


class NoSolution(ValueError):
    """No warp radius exists inside the admissible bracket."""


class ScenarioInvalid(ValueError):
    """A scenario file or mapping is malformed."""


class TooShort(ValueError):
    """A trajectory has too few points for the requested metric."""


class GoalSwallowed(UserWarning):
    """A predicted obstacle footprint overlapped the goal region and was clipped."""
