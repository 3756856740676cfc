"""Capture-slide-grasp planning over a reconstructed thread.

A direct grasp at an unreliable stretch of the reconstruction is likely to
miss. Instead the gripper can first close loosely around the thread at a
high-confidence point (capture), slide along the reconstruction to the goal
while keeping the thread enclosed, and grasp there. Capture success is
scored from the interpolated depth-bound profile through a gaussian;
each slide step multiplies in a constant retention probability, so the
planner trades capture confidence against slide length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .reconstruct import ReconstructionResult
from .synth import GroundTruth

_Z_AXIS = np.array([0.0, 0.0, 1.0])
_X_AXIS = np.array([1.0, 0.0, 0.0])
# Tangents closer than 5 degrees to the camera axis use the image-x fallback
# when building the approach direction.
_SINGULARITY_COS = math.cos(math.radians(5.0))


class GraspOutcome(Enum):
    SUCCESS = "success"
    CAPTURE_MISS = "capture_miss"
    SLIP_DURING_SLIDE = "slip_during_slide"


@dataclass(frozen=True)
class GraspConfig:
    """Planner and simulator constants.

    ``slide_prob`` is the per-step retention probability between adjacent
    grid waypoints; ``sigma_capture`` converts interpolated depth bounds to
    capture probability; ``jaw_aperture`` is the simulator's enclosure
    envelope.
    """

    slide_prob: float = 0.99
    sigma_capture: float = 2e-3
    grid_size: int = 100
    jaw_aperture: float = 5e-3

    def __post_init__(self):
        if not 0.0 < self.slide_prob <= 1.0:
            raise ValueError("slide_prob must lie in (0, 1]")
        if self.sigma_capture <= 0:
            raise ValueError("sigma_capture must be positive")
        if self.grid_size < 2:
            raise ValueError("grid_size must be at least 2")
        if self.jaw_aperture <= 0:
            raise ValueError("jaw_aperture must be positive")


@dataclass(frozen=True)
class Pose:
    """Rigid gripper pose: position plus a proper rotation.

    Column 0 is the jaw rotational axis (aligned with the curve tangent),
    column 2 the approach axis, column 1 their right-handed complement.
    """

    position: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))


@dataclass(frozen=True)
class CsgPlan:
    """Planned capture-slide-grasp trajectory.

    ``waypoint_params`` runs from the capture parameter to the goal in
    adjacent steps on the planning grid; a single waypoint is a direct
    grasp. ``success_probability`` is the planner's estimate, not a
    simulation outcome.
    """

    waypoint_params: np.ndarray
    waypoint_poses: tuple[Pose, ...]
    success_probability: float
    capture_param: float
    goal_param: float

    def __post_init__(self):
        object.__setattr__(
            self, "waypoint_params", np.asarray(self.waypoint_params, dtype=float)
        )

    @property
    def num_waypoints(self) -> int:
        return len(self.waypoint_params)

    @property
    def is_direct(self) -> bool:
        return self.num_waypoints == 1


def interpolated_depth_bound(result: ReconstructionResult, s: np.ndarray) -> np.ndarray:
    """Depth-bound profile along the curve.

    Linear interpolation of each region's depth bound against its final
    curve parameter, clamped at the ends.
    """
    eps = np.array([r.eps_z for r in result.regions])
    return np.interp(np.asarray(s, dtype=float), result.params.values, eps)


def capture_probability(
    result: ReconstructionResult, s: np.ndarray | float, cfg: GraspConfig | None = None
) -> np.ndarray | float:
    """Probability that enclosing the thread at parameter s succeeds.

    A gaussian of the interpolated depth bound: 1 where the reconstruction
    is certain, decaying as the bound widens.
    """
    cfg = cfg or GraspConfig()
    eps = interpolated_depth_bound(result, np.atleast_1d(np.asarray(s, dtype=float)))
    p = np.exp(-(eps**2) / (2.0 * cfg.sigma_capture**2))
    return float(p[0]) if np.ndim(s) == 0 else p


def trajectory_probability(capture_p: float, w: int, cfg: GraspConfig | None = None) -> float:
    """Success probability of a capture followed by w-1 slide steps."""
    cfg = cfg or GraspConfig()
    if w < 1:
        raise ValueError("a trajectory has at least one waypoint")
    return float(capture_p * cfg.slide_prob ** (w - 1))


def gripper_pose(result: ReconstructionResult, s: float) -> Pose:
    """Gripper pose at parameter s.

    Jaw axis follows the unit tangent; the approach axis is the camera view
    direction (pointing back toward the camera) projected off the tangent,
    falling back to the image x direction when the tangent runs along the
    camera axis.
    """
    spline = result.spline
    tangent = spline.derivative().evaluate(float(s))
    norm = np.linalg.norm(tangent)
    if norm < 1e-12:
        raise ValueError(f"degenerate tangent at s={s}")
    jaw = tangent / norm
    ref = -_Z_AXIS if abs(jaw @ _Z_AXIS) < _SINGULARITY_COS else _X_AXIS
    approach = ref - (ref @ jaw) * jaw
    approach /= np.linalg.norm(approach)
    rotation = np.column_stack([jaw, np.cross(approach, jaw), approach])
    return Pose(position=spline.evaluate(float(s)), rotation=rotation)


def plan(
    result: ReconstructionResult, s_goal: float, cfg: GraspConfig | None = None
) -> CsgPlan:
    """Best capture point for grasping at ``s_goal``.

    Every grid point is a capture candidate; the winner maximizes capture
    probability times the per-step slide retention raised to the number of
    slide steps. Ties prefer the shorter slide, then the smaller parameter.
    The goal snaps to the nearest grid point so waypoints stay on the grid.
    """
    cfg = cfg or GraspConfig()
    if not 0.0 <= s_goal <= 1.0:
        raise ValueError(f"goal parameter must lie in [0, 1], got {s_goal}")
    grid = np.linspace(0.0, 1.0, cfg.grid_size)
    goal_idx = int(round(s_goal * (cfg.grid_size - 1)))
    p_cap = np.asarray(capture_probability(result, grid, cfg))
    steps = np.abs(np.arange(cfg.grid_size) - goal_idx)
    scores = p_cap * cfg.slide_prob**steps

    best = int(np.lexsort((np.arange(cfg.grid_size), steps, -scores))[0])
    capture_idx = best
    direction = 1 if goal_idx >= capture_idx else -1
    indices = np.arange(capture_idx, goal_idx + direction, direction)
    params = grid[indices]
    poses = tuple(gripper_pose(result, s) for s in params)
    return CsgPlan(
        waypoint_params=params,
        waypoint_poses=poses,
        success_probability=float(scores[capture_idx]),
        capture_param=float(grid[capture_idx]),
        goal_param=float(grid[goal_idx]),
    )


def direct_plan(
    result: ReconstructionResult, s_goal: float, cfg: GraspConfig | None = None
) -> CsgPlan:
    """Single-waypoint plan that grasps straight at the goal."""
    cfg = cfg or GraspConfig()
    if not 0.0 <= s_goal <= 1.0:
        raise ValueError(f"goal parameter must lie in [0, 1], got {s_goal}")
    grid = np.linspace(0.0, 1.0, cfg.grid_size)
    goal_idx = int(round(s_goal * (cfg.grid_size - 1)))
    s = float(grid[goal_idx])
    return CsgPlan(
        waypoint_params=np.array([s]),
        waypoint_poses=(gripper_pose(result, s),),
        success_probability=float(capture_probability(result, s, cfg)),
        capture_param=s,
        goal_param=s,
    )


def simulate_grasp(
    plan: CsgPlan, truth: GroundTruth, cfg: GraspConfig | None = None
) -> GraspOutcome:
    """Deterministic grasp outcome against the true curve.

    Capture requires the true thread within half the jaw aperture of the
    capture pose. Once enclosed the thread is dragged along inside the
    jaws, so sliding fails only if consecutive waypoints jump farther than
    the enclosure envelope (distance to the thread is 1-Lipschitz in the
    gripper position, so a small step can never shed an enclosed thread).
    Thread deformation during the slide is not otherwise modeled.
    """
    cfg = cfg or GraspConfig()
    reach = cfg.jaw_aperture / 2.0
    positions = np.array([p.position for p in plan.waypoint_poses])
    if truth.min_distance(positions[0]) > reach:
        return GraspOutcome.CAPTURE_MISS
    if len(positions) > 1:
        jumps = np.linalg.norm(np.diff(positions, axis=0), axis=1)
        if np.any(jumps > reach):
            return GraspOutcome.SLIP_DURING_SLIDE
    return GraspOutcome.SUCCESS
