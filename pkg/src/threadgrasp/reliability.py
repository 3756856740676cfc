"""Per-observation reliability regions.

Each observation gets a box: fixed pixel bounds in the image plane and a
depth bound sized from the residual of a local line fit of depth against
observation index. Noisy stretches fit poorly and get wide depth bounds;
locally clean stretches get the floor. The box is stored as six half-spaces
(four from the pixel bounds, two from depth) ready to stack into the QP.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .camera import CameraModel
from .observation import Observation

DEPTH_RESIDUAL_GAIN = 1.5
DEFAULT_EPS_Z_FLOOR = 5e-4  # meters; keeps the QP feasible on collinear depths
DEFAULT_WINDOW = 7

_E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ReliabilityParams:
    """Scene-level knobs for region construction."""

    eps_u: float = 3.0
    eps_v: float = 3.0
    window: int = DEFAULT_WINDOW
    eps_z_floor: float = DEFAULT_EPS_Z_FLOOR

    def __post_init__(self):
        if self.eps_u <= 0 or self.eps_v <= 0:
            raise ValueError("pixel bounds must be positive")
        if self.window < 3:
            raise ValueError("window must be at least 3")
        if self.eps_z_floor <= 0:
            raise ValueError("eps_z_floor must be positive")


@dataclass(frozen=True)
class ReliabilityRegion:
    """Box around one observation, in half-space form ``rows @ x <= offsets``.

    Rows 0-3 bound the pixel projection (offsets 0, bound folded into the
    row), rows 4-5 bound the depth. The center satisfies all six strictly.
    """

    center: np.ndarray
    eps_u: float
    eps_v: float
    eps_z: float
    halfspace_rows: np.ndarray
    halfspace_offsets: np.ndarray

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(self.halfspace_rows @ np.asarray(x, float) <= self.halfspace_offsets + tol))

    def widened(self, depth_factor: float) -> "ReliabilityRegion":
        """Same region with the depth bound scaled by ``depth_factor``."""
        eps_z = self.eps_z * depth_factor
        rows = self.halfspace_rows.copy()
        offsets = self.halfspace_offsets.copy()
        offsets[4] = self.center[2] + eps_z
        offsets[5] = -(self.center[2] - eps_z)
        return replace(
            self, eps_z=eps_z, halfspace_rows=rows, halfspace_offsets=offsets
        )

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(
            self, "halfspace_rows", np.asarray(self.halfspace_rows, dtype=float)
        )
        object.__setattr__(
            self, "halfspace_offsets", np.asarray(self.halfspace_offsets, dtype=float)
        )


def depth_bound(
    observations: list[Observation],
    j: int,
    window: int = DEFAULT_WINDOW,
    eps_z_floor: float = DEFAULT_EPS_Z_FLOOR,
) -> float:
    """Depth bound at observation j from a local depth-vs-index line fit.

    The window is centered on j and truncated (not shifted) at the sequence
    ends. Returns ``max(1.5 * |fit residual at j|, eps_z_floor)``.
    """
    if window < 3:
        raise ValueError("window must be at least 3")
    n = len(observations)
    if not 0 <= j < n:
        raise IndexError(f"observation index {j} outside [0, {n})")
    half = window // 2
    lo = max(0, j - half)
    hi = min(n, j + half + 1)
    idx = np.arange(lo, hi, dtype=float)
    depths = np.array([observations[k].position[2] for k in range(lo, hi)])
    coeffs = np.polynomial.polynomial.polyfit(idx, depths, deg=1)
    fitted = coeffs[0] + coeffs[1] * j
    return max(DEPTH_RESIDUAL_GAIN * abs(fitted - depths[j - lo]), eps_z_floor)


def build_regions(
    observations: list[Observation],
    cam: CameraModel,
    params: ReliabilityParams | None = None,
) -> list[ReliabilityRegion]:
    """One reliability region per observation.

    Half-space membership of any positive-depth point is algebraically
    identical to the pixel-box plus depth-interval test.
    """
    params = params or ReliabilityParams()
    if len(observations) < params.window:
        raise ValueError(
            f"need at least window={params.window} observations, got {len(observations)}"
        )
    regions = []
    for j, obs in enumerate(observations):
        eps_z = depth_bound(observations, j, params.window, params.eps_z_floor)
        pixel_rows = cam.halfspace_from_pixel_bound(
            obs.position, params.eps_u, params.eps_v
        )
        rows = np.array([r for r, _ in pixel_rows] + [_E3, -_E3])
        offsets = np.array(
            [off for _, off in pixel_rows]
            + [obs.position[2] + eps_z, -(obs.position[2] - eps_z)]
        )
        region = ReliabilityRegion(
            center=obs.position,
            eps_u=params.eps_u,
            eps_v=params.eps_v,
            eps_z=eps_z,
            halfspace_rows=rows,
            halfspace_offsets=offsets,
        )
        regions.append(region)
    return regions


def region_diagonal(region: ReliabilityRegion, cam: CameraModel) -> float:
    """Full 3D diagonal of the region box in meters.

    Pixel half-widths convert to meters at the center depth through the
    focal scales of the projection.
    """
    z = region.center[2]
    fu = abs(cam.projection[0, 0])
    fv = abs(cam.projection[1, 1])
    du = region.eps_u * z / fu
    dv = region.eps_v * z / fv
    return 2.0 * float(np.sqrt(du * du + dv * dv + region.eps_z * region.eps_z))
