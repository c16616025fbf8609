"""Exception types shared across the package."""

__all__ = [
    "CellTrafficError",
    "DegenerateInput",
    "TooFewPoints",
    "EmptyPattern",
    "EmptyAttractorSet",
    "NumericalNonConvergence",
    "Infeasible",
]


class CellTrafficError(Exception):
    """Base class for errors raised by this package."""


class DegenerateInput(CellTrafficError):
    """Geometry input admits no valid tessellation (e.g. collinear points)."""


class TooFewPoints(CellTrafficError):
    """An operation needs more points than the pattern provides."""


class EmptyPattern(CellTrafficError):
    """A statistic was requested for a pattern with no points."""


class EmptyAttractorSet(CellTrafficError):
    """Traffic generation requires at least one attractor."""


class NumericalNonConvergence(CellTrafficError):
    """An iterative numerical routine failed to bracket or converge."""


class Infeasible(CellTrafficError):
    """A requested (cov, correlation) target lies outside the feasible region.

    Attributes
    ----------
    nearest_feasible : tuple of float
        The closest achievable (cov, correlation) pair.
    """

    def __init__(self, target, nearest_feasible):
        self.target = tuple(float(v) for v in target)
        self.nearest_feasible = tuple(float(v) for v in nearest_feasible)
        super().__init__(
            f"target (cov={self.target[0]:.4f}, corr={self.target[1]:.4f}) is "
            f"outside the feasible region; nearest feasible point is "
            f"(cov={self.nearest_feasible[0]:.4f}, corr={self.nearest_feasible[1]:.4f})"
        )
