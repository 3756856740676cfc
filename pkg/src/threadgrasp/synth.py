"""Synthetic thread scenes: ground-truth curves plus controlled noise.

Stands in for real endoscopic capture so the pipeline can be exercised at
desk scale. Depth noise can be amplified over chosen parameter segments (the
stereo-ambiguous analog) and segments can be dropped entirely (the occlusion
analog). Generation is deterministic given a seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bspline import BSplineCurve, SplineConfig
from .camera import CameraModel
from .errors import CurveBehindCamera
from .observation import RawPoint

_DENSE_SAMPLES = 4096


@dataclass(frozen=True)
class CurveSpec:
    """Parametric ground-truth curve, length and placement in meters.

    Kinds:
      line   - straight segment along x.
      sine   - sine displacement across the x run; ``amplitude`` in y and
               ``depth_amplitude`` in z.
      helix  - circular sweep in (y, z) while advancing in x.
      zbend  - smoothstep plunge in depth across the middle (a stretch of
               the curve heads along the camera axis).
    """

    kind: str = "sine"
    center: tuple[float, float, float] = (0.0, 0.0, 0.15)
    length: float = 0.06
    amplitude: float = 0.01
    depth_amplitude: float = 0.0
    cycles: float = 1.5

    def __post_init__(self):
        if self.kind not in ("line", "sine", "helix", "zbend"):
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if self.length <= 0:
            raise ValueError("length must be positive")

    def point(self, t: np.ndarray | float) -> np.ndarray:
        """Curve point(s) at raw parameter t in [0, 1] (not arc length)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        cx, cy, cz = self.center
        x = cx + (t - 0.5) * self.length
        phase = 2.0 * math.pi * self.cycles * t
        if self.kind == "line":
            y = np.full_like(t, cy)
            z = np.full_like(t, cz)
        elif self.kind == "sine":
            y = cy + self.amplitude * np.sin(phase)
            z = cz + self.depth_amplitude * np.sin(phase + 0.5 * math.pi)
        elif self.kind == "helix":
            y = cy + self.amplitude * np.sin(phase)
            z = cz + max(self.depth_amplitude, self.amplitude) * np.cos(phase)
        else:  # zbend
            y = cy + self.amplitude * np.sin(phase)
            w = np.clip((t - 0.3) / 0.4, 0.0, 1.0)
            z = cz + self.depth_amplitude * (3 * w**2 - 2 * w**3)
        return np.column_stack([x, y, z])

    def arc_length_params(self, n: int) -> np.ndarray:
        """Raw parameters of n points equally spaced in arc length."""
        t = np.linspace(0.0, 1.0, _DENSE_SAMPLES)
        pts = self.point(t)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        targets = np.linspace(0.0, cum[-1], n)
        return np.interp(targets, cum, t)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive observation noise model.

    ``sigma_px`` jitters the pixel; ``sigma_z`` jitters the depth.
    ``noisy_segments`` are (t0, t1, scale) triples multiplying the depth
    sigma, mimicking stereo-ambiguous stretches; in those stretches
    matching-cost pairs are also drawn closer together. ``gaps`` are (t0, t1)
    spans dropped entirely. ``ambiguous_fraction`` of points get equal
    best/second costs plus a large depth error; the default filter removes
    them.
    """

    sigma_px: float = 0.0
    sigma_z: float = 0.0
    noisy_segments: tuple[tuple[float, float, float], ...] = ()
    gaps: tuple[tuple[float, float], ...] = ()
    ambiguous_fraction: float = 0.0

    def depth_sigma(self, t: np.ndarray) -> np.ndarray:
        sigma = np.full_like(t, self.sigma_z)
        for t0, t1, scale in self.noisy_segments:
            mask = (t >= t0) & (t <= t1)
            sigma[mask] = self.sigma_z * scale
        return sigma

    def in_gap(self, t: np.ndarray) -> np.ndarray:
        mask = np.zeros_like(t, dtype=bool)
        for t0, t1 in self.gaps:
            mask |= (t >= t0) & (t <= t1)
        return mask


@dataclass(frozen=True)
class GroundTruth:
    """Reference curve for evaluation: dense samples plus a spline fit."""

    samples: np.ndarray
    spline: BSplineCurve | None = None
    curve_spec: CurveSpec | None = None

    @property
    def total_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.samples, axis=0), axis=1)))

    def min_distance(self, points: np.ndarray) -> np.ndarray | float:
        """Distance from query point(s) to the sampled curve polyline."""
        single = np.asarray(points).ndim == 1
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        a = self.samples[:-1]
        ab = self.samples[1:] - a
        ab_sq = np.einsum("ij,ij->i", ab, ab)
        ab_sq[ab_sq == 0.0] = 1.0
        out = np.empty(len(pts))
        for i, p in enumerate(pts):
            ap = p - a
            t = np.clip(np.einsum("ij,ij->i", ap, ab) / ab_sq, 0.0, 1.0)
            closest = a + t[:, None] * ab
            out[i] = np.sqrt(np.min(np.sum((p - closest) ** 2, axis=1)))
        return float(out[0]) if single else out


def fit_ground_truth_spline(samples: np.ndarray, num_control: int = 40) -> BSplineCurve:
    """Least-squares cubic spline through dense ordered samples."""
    config = SplineConfig(num_control=num_control, degree=3)
    s = np.linspace(0.0, 1.0, len(samples))
    W = config.basis_matrix(s)
    ctrl, *_ = np.linalg.lstsq(W, samples, rcond=None)
    return BSplineCurve(config, ctrl)


def ground_truth_from_spec(spec: CurveSpec) -> GroundTruth:
    t = spec.arc_length_params(_DENSE_SAMPLES // 2)
    samples = spec.point(t)
    return GroundTruth(
        samples=samples, spline=fit_ground_truth_spline(samples), curve_spec=spec
    )


def synthesize_scene(
    truth: CurveSpec,
    noise: NoiseSpec,
    cam: CameraModel,
    n: int,
    seed: int,
) -> tuple[list[RawPoint], GroundTruth]:
    """Sample n noisy observations of a ground-truth curve.

    Points are taken at equal ground-truth arc length, depth-perturbed per
    the noise spec, and back-projected from jittered pixels so pixel and 3D
    noise stay consistent. Gap segments yield no points. Output order follows
    the curve, so scenes may replay these points as pre-ordered observations.
    """
    if n < 4:
        raise ValueError(f"need n >= 4 sample points, got {n}")
    t_dense = np.linspace(0.0, 1.0, 512)
    if np.any(truth.point(t_dense)[:, 2] < cam.min_depth):
        raise CurveBehindCamera("ground-truth curve crosses the minimum depth plane")

    rng = np.random.default_rng(seed)
    t = truth.arc_length_params(n)
    keep = ~noise.in_gap(t)
    t = t[keep]
    pts = truth.point(t)

    sigma_z = noise.depth_sigma(t)
    dz = rng.normal(0.0, 1.0, len(t)) * sigma_z
    dpx = rng.normal(0.0, noise.sigma_px, (len(t), 2)) if noise.sigma_px > 0 else 0.0

    ambiguous = rng.random(len(t)) < noise.ambiguous_fraction
    # Ambiguous matches carry gross depth error on top of the base noise.
    gross = rng.normal(0.0, 1.0, len(t)) * 10.0 * np.maximum(sigma_z, 1e-3)
    dz = np.where(ambiguous, dz + gross, dz)

    pixels = cam.project(pts) + dpx
    depths = np.maximum(pts[:, 2] + dz, cam.min_depth)
    positions = cam.backproject(pixels, depths)

    cost_best = rng.uniform(0.3, 1.0, len(t))
    ratio = rng.uniform(2.0, 3.0, len(t))
    in_noisy = sigma_z > noise.sigma_z + 1e-15
    # Ambiguous stretches also show weaker cost separation.
    ratio = np.where(in_noisy, rng.uniform(1.2, 1.8, len(t)), ratio)
    cost_second = np.where(ambiguous, cost_best, cost_best * ratio)

    points = [
        RawPoint(
            position=positions[i],
            cost_best=float(cost_best[i]),
            cost_second=float(cost_second[i]),
            pixel=pixels[i],
        )
        for i in range(len(t))
    ]
    return points, ground_truth_from_spec(truth)
