"""Pinhole camera model: projection, back-projection, and the algebra
used to turn pixel-box bounds into linear half-spaces on 3D points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DepthTooSmall

_E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera with a 2x3 projection block.

    ``projection`` maps a camera-frame point, after division by its
    z-component, to pixel coordinates: ``pixel = (1/z) * projection @ p``.
    Skew and non-square pixels are allowed; only linearity is required.

    ``min_depth`` guards the division and the positive-depth assumption of
    the half-space linearization.
    """

    projection: np.ndarray
    image_width: int = 640
    image_height: int = 480
    min_depth: float = 1e-3

    def __post_init__(self):
        proj = np.asarray(self.projection, dtype=float)
        if proj.shape != (2, 3):
            raise ValueError(f"projection must be 2x3, got {proj.shape}")
        if self.min_depth <= 0:
            raise ValueError("min_depth must be positive")
        if abs(np.linalg.det(proj[:, :2])) < 1e-12:
            raise ValueError("projection x/y block is singular; cannot back-project")
        object.__setattr__(self, "projection", proj)

    def project(self, p: np.ndarray) -> np.ndarray:
        """Project camera-frame point(s) to pixels.

        Accepts shape (3,) or (N, 3); returns (2,) or (N, 2). Raises
        :class:`DepthTooSmall` if any z-component is below ``min_depth``.
        """
        p = np.asarray(p, dtype=float)
        single = p.ndim == 1
        pts = np.atleast_2d(p)
        z = pts[:, 2]
        if np.any(z < self.min_depth):
            bad = float(z.min())
            raise DepthTooSmall(f"depth {bad:g} < min_depth {self.min_depth:g}")
        pix = (pts @ self.projection.T) / z[:, None]
        return pix[0] if single else pix

    def backproject(self, pixel: np.ndarray, depth: np.ndarray | float) -> np.ndarray:
        """Invert the projection at a known depth.

        Accepts (2,)/scalar or (N, 2)/(N,); returns (3,) or (N, 3).
        """
        pixel = np.asarray(pixel, dtype=float)
        single = pixel.ndim == 1
        pix = np.atleast_2d(pixel)
        z = np.broadcast_to(np.asarray(depth, dtype=float), (len(pix),)).astype(float)
        if np.any(z < self.min_depth):
            raise DepthTooSmall(f"depth {float(z.min()):g} < min_depth {self.min_depth:g}")
        m2 = self.projection[:, :2]
        m3 = self.projection[:, 2]
        xy = np.linalg.solve(m2, (pix - m3).T).T * z[:, None]
        out = np.column_stack([xy, z])
        return out[0] if single else out

    def halfspace_from_pixel_bound(
        self, center: np.ndarray, bound_u: float, bound_v: float
    ) -> list[tuple[np.ndarray, float]]:
        """Linearize a pixel box around the projection of ``center``.

        Returns four ``(row, offset)`` pairs, each meaning ``row @ x <= offset``
        with offset 0. For any x with positive depth, all four hold iff
        ``|project(x) - project(center)| <= (bound_u, bound_v)`` componentwise:
        multiplying the pixel inequality through by the (positive) depth and
        folding the bound into the matrix via the e3 outer product makes the
        constraint linear in x.
        """
        center = np.asarray(center, dtype=float)
        if center.shape != (3,):
            raise ValueError("center must be a 3-vector")
        if bound_u <= 0 or bound_v <= 0:
            raise ValueError("pixel bounds must be positive")
        q = self.project(center)
        b = np.array([bound_u, bound_v])
        upper = self.projection - np.outer(q + b, _E3)
        lower = -self.projection + np.outer(q - b, _E3)
        return [
            (upper[0], 0.0),
            (upper[1], 0.0),
            (lower[0], 0.0),
            (lower[1], 0.0),
        ]
