"""Clamped uniform B-spline algebra.

Provides basis evaluation, derivative splines, the quadratic smoothing
objective built from the third-derivative control points, per-observation
constraint rows, and arc-length quadrature. The smoothing energy of a cubic
spline reduces to a quadratic form: the third derivative is piecewise
constant, its control points are linear in the original control points, and
on clamped uniform knots every third-derivative knot interval has the same
width, so

    integral of |B'''(s)|^2 ds  =  (1/S) * sum_k |P'''_k|^2  =  (1/S) P^T A P

with S the number of spans. The constant factor is dropped; it does not move
the argmin.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from .errors import DegreeZero, IndexOutOfRange, InvalidInterval

if TYPE_CHECKING:  # pragma: no cover
    from .reliability import ReliabilityRegion


@dataclass(frozen=True)
class SplineConfig:
    """Knot layout for a clamped uniform B-spline.

    ``num_control`` control points of degree ``degree`` over knots in [0, 1]:
    the first and last knots repeat degree+1 times and interior knots are
    evenly spaced, giving ``num_control - degree`` equal spans.
    """

    num_control: int
    degree: int = 3

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be non-negative")
        if self.num_control < self.degree + 1:
            raise ValueError(
                f"need at least degree+1={self.degree + 1} control points, "
                f"got {self.num_control}"
            )

    @cached_property
    def knots(self) -> np.ndarray:
        m, d = self.num_control, self.degree
        interior = np.linspace(0.0, 1.0, m - d + 1)[1:-1]
        return np.concatenate([np.zeros(d + 1), interior, np.ones(d + 1)])

    @property
    def num_spans(self) -> int:
        return self.num_control - self.degree

    def span_index(self, s: np.ndarray) -> np.ndarray:
        """Knot-span index for each parameter value.

        Spans are half-open [t_i, t_{i+1}) except the last, which is closed
        on the right so s = 1 evaluates to the final control point.
        """
        t = self.knots
        d, m = self.degree, self.num_control
        idx = np.searchsorted(t, s, side="right") - 1
        return np.clip(idx, d, m - 1)

    def basis_matrix(self, s: np.ndarray | float) -> np.ndarray:
        """All basis function values at the given parameters.

        Returns shape (len(s), num_control); each row sums to 1. Uses the
        local triangular recurrence, so only degree+1 entries per row are
        nonzero.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s < 0.0) or np.any(s > 1.0):
            raise ValueError("parameters must lie in [0, 1]")
        t = self.knots
        d = self.degree
        span = self.span_index(s)
        n = len(s)
        vals = np.zeros((n, d + 1))
        vals[:, 0] = 1.0
        left = np.empty((n, d + 1))
        right = np.empty((n, d + 1))
        for j in range(1, d + 1):
            left[:, j] = s - t[span + 1 - j]
            right[:, j] = t[span + j] - s
            saved = np.zeros(n)
            for r in range(j):
                denom = right[:, r + 1] + left[:, j - r]
                temp = vals[:, r] / denom
                vals[:, r] = saved + right[:, r + 1] * temp
                saved = left[:, j - r] * temp
            vals[:, j] = saved
        out = np.zeros((n, self.num_control))
        cols = span[:, None] - d + np.arange(d + 1)[None, :]
        np.put_along_axis(out, cols, vals, axis=1)
        return out

    def basis(self, k: int, s: float) -> float:
        """Value of the k-th basis function at s (0-based index)."""
        if not 0 <= k < self.num_control:
            raise IndexOutOfRange(f"basis index {k} outside [0, {self.num_control})")
        return float(self.basis_matrix(float(s))[0, k])

    @cached_property
    def greville(self) -> np.ndarray:
        """Greville abscissae: knot averages where control points 'live'.

        A straight line is reproduced exactly by placing control points
        affinely in these values.
        """
        t, d = self.knots, self.degree
        if d == 0:
            return 0.5 * (t[:-1] + t[1:])
        return np.array([t[k + 1 : k + d + 1].mean() for k in range(self.num_control)])

    def derivative_matrix(self) -> np.ndarray:
        """Linear map from control points to derivative control points.

        Shape (num_control-1, num_control). The derivative spline has degree
        one lower, one fewer control point, and stays in the clamped uniform
        family (its knot vector is this one with the first and last knot
        dropped).
        """
        if self.degree == 0:
            raise DegreeZero("cannot differentiate a degree-0 spline")
        t, d, m = self.knots, self.degree, self.num_control
        D = np.zeros((m - 1, m))
        for k in range(m - 1):
            scale = d / (t[k + d + 1] - t[k + 1])
            D[k, k] = -scale
            D[k, k + 1] = scale
        return D

    def derivative_config(self) -> "SplineConfig":
        if self.degree == 0:
            raise DegreeZero("cannot differentiate a degree-0 spline")
        return SplineConfig(self.num_control - 1, self.degree - 1)


@dataclass(frozen=True)
class BSplineCurve:
    """A B-spline curve in R^3: a config plus (num_control, 3) control points."""

    config: SplineConfig
    control_points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.control_points, dtype=float)
        if pts.shape != (self.config.num_control, 3):
            raise ValueError(
                f"control points must be ({self.config.num_control}, 3), got {pts.shape}"
            )
        object.__setattr__(self, "control_points", pts)

    @property
    def flat(self) -> np.ndarray:
        """Control points vectorized point-major: (x1,y1,z1, x2,y2,z2, ...)."""
        return self.control_points.reshape(-1)

    def evaluate(self, s: np.ndarray | float) -> np.ndarray:
        """Curve point(s) at parameter(s) s in [0, 1]."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        pts = self.config.basis_matrix(s_arr) @ self.control_points
        return pts[0] if np.isscalar(s) or np.ndim(s) == 0 else pts

    def derivative(self) -> "BSplineCurve":
        """The derivative curve, itself a clamped uniform spline."""
        D = self.config.derivative_matrix()
        return BSplineCurve(self.config.derivative_config(), D @ self.control_points)

    def speed(self, s: np.ndarray | float) -> np.ndarray:
        """|B'(s)| at the given parameter(s)."""
        d = self.derivative()
        v = np.atleast_2d(d.evaluate(np.atleast_1d(np.asarray(s, dtype=float))))
        out = np.linalg.norm(v, axis=1)
        return out[0] if np.isscalar(s) or np.ndim(s) == 0 else out

    def arc_length(self, a: float = 0.0, b: float = 1.0, order: int = 6) -> float:
        """Arc length over [a, b] by composite Gauss-Legendre quadrature.

        The integrand |B'| is only piecewise smooth, so the interval is split
        at interior knots and each piece integrated with an ``order``-point
        rule.
        """
        if not (0.0 <= a <= b <= 1.0):
            raise InvalidInterval(f"need 0 <= a <= b <= 1, got a={a}, b={b}")
        if a == b:
            return 0.0
        deriv = self.derivative()
        nodes, weights = np.polynomial.legendre.leggauss(order)
        t = self.config.knots
        d = self.config.degree
        breaks = t[d : self.config.num_control + 1]
        cuts = np.unique(np.concatenate([[a], breaks[(breaks > a) & (breaks < b)], [b]]))
        lo, hi = cuts[:-1], cuts[1:]
        half = 0.5 * (hi - lo)
        mids = 0.5 * (hi + lo)
        pts = (mids[:, None] + half[:, None] * nodes[None, :]).reshape(-1)
        speeds = np.linalg.norm(
            deriv.config.basis_matrix(pts) @ deriv.control_points, axis=1
        ).reshape(len(lo), order)
        return float(np.sum(half * (speeds @ weights)))


def third_derivative_points(config: SplineConfig) -> np.ndarray:
    """Composite map from control points to third-derivative control points.

    Shape (num_control-3, num_control); requires degree 3.
    """
    if config.degree != 3:
        raise ValueError("third-derivative map requires a cubic spline")
    c1 = config
    D1 = c1.derivative_matrix()
    c2 = c1.derivative_config()
    D2 = c2.derivative_matrix()
    c3 = c2.derivative_config()
    D3 = c3.derivative_matrix()
    return D3 @ D2 @ D1


@dataclass(frozen=True)
class MvcObjective:
    """Quadratic smoothing objective P^T A P over vectorized control points.

    ``matrix_a`` is symmetric PSD of shape (3m, 3m) with a 9-dimensional null
    space (quadratic polynomial curves have zero third derivative).
    ``third_deriv_map`` is the factor M with A = M^T M; evaluating the energy
    as |M P|^2 is numerically preferable near the null space.
    """

    matrix_a: np.ndarray
    third_deriv_map: np.ndarray

    def energy(self, flat_points: np.ndarray) -> float:
        r = self.third_deriv_map @ flat_points
        return float(r @ r)


def build_mvc_matrix(config: SplineConfig) -> MvcObjective:
    """Assemble the smoothing objective for a cubic spline config.

    The quadratic form equals the sum of squared third-derivative control
    points; the uniform span width of the third-derivative spline is folded
    into the dropped proportionality constant.
    """
    if config.num_control < 5:
        raise ValueError("smoothing objective needs at least 5 control points")
    T = third_derivative_points(config)
    M = np.kron(T, np.eye(3))
    A = M.T @ M
    A = 0.5 * (A + A.T)
    return MvcObjective(matrix_a=A, third_deriv_map=M)


def constraint_rows(
    config: SplineConfig, region: "ReliabilityRegion", s_j: float
) -> tuple[np.ndarray, np.ndarray]:
    """Region membership at parameter s_j as linear rows on control points.

    Each region half-space (row r, offset o) meaning ``r @ x <= o`` becomes a
    row on the vectorized control points: ``kron(w, r) @ P - o <= 0`` where w
    holds the basis weights at s_j. Returns (C_j, f_j) with the convention
    ``C_j @ P + f_j <= 0``; membership of B(s_j) in the region is an exact
    algebraic equivalence for positive depth.
    """
    if not 0.0 <= s_j <= 1.0:
        raise ValueError(f"s_j must be in [0, 1], got {s_j}")
    w = config.basis_matrix(float(s_j))[0]
    C = np.kron(w[None, :], region.halfspace_rows)
    f = -region.halfspace_offsets
    return C, f
