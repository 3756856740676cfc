"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ThreadGraspError(Exception):
    """Base class for all package errors."""


class DepthTooSmall(ThreadGraspError):
    """A 3D point lies closer than the camera's minimum admissible depth."""


class DegenerateDenominator(ThreadGraspError):
    """The peak-similarity denominator for a point is zero or negative."""

    def __init__(self, point_index: int, denominator: float):
        self.point_index = point_index
        self.denominator = denominator
        super().__init__(
            f"peak-similarity denominator {denominator:g} at point "
            f"{point_index} (must be positive)"
        )


class TooFewObservations(ThreadGraspError):
    """Not enough points or clusters to form an observation sequence."""


class AmbiguousOrdering(ThreadGraspError):
    """Observation chain would branch; the curve likely self-intersects."""


class DuplicateObservations(ThreadGraspError):
    """Consecutive observations coincide, so chord lengths degenerate."""


class CurveBehindCamera(ThreadGraspError):
    """A ground-truth curve dips below the camera's minimum depth."""


class DegreeZero(ThreadGraspError):
    """A degree-0 spline cannot be differentiated as a spline."""


class InvalidInterval(ThreadGraspError):
    """Integration bounds are outside [0, 1] or reversed."""


class IndexOutOfRange(ThreadGraspError):
    """Basis or control-point index outside the valid range."""


class DegenerateVelocity(ThreadGraspError):
    """The curve velocity vanishes where a unit tangent is required."""


class SolverError(ThreadGraspError):
    """Base class for QP solver failures."""


class NumericalFailure(SolverError):
    """Matrix factorization broke down during a solve."""


class TooLarge(SolverError):
    """Problem exceeds the size gate of the exhaustive oracle."""


class InfeasibleProblem(SolverError):
    """The constraint set admits no solution (divergence certificate)."""


class InfeasibleAfterRetries(ThreadGraspError):
    """Reconstruction stayed infeasible after all depth-bound widenings."""


class SceneFileError(ThreadGraspError):
    """Scene or result document is malformed.

    ``field`` names the offending entry when known.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message if field is None else f"{message} (field: {field})")
