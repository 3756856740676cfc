"""Pipeline configuration with file/flag override plumbing."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

from .bspline import SplineConfig
from .errors import SceneFileError
from .grasp import GraspConfig
from .qpsolver import SolverSettings


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the reconstruction and grasping pipeline.

    Defaults: 20 control points, 5 iterations, order-6 quadrature, 0.99
    slide retention, 100-point planning grid.
    """

    control_points: int = 20
    max_iters: int = 5
    quad_order: int = 6
    speed_tol: float = 0.02
    speed_samples: int = 100
    slide_prob: float = 0.99
    sigma_capture: float = 2e-3
    grid: int = 100
    jaw_aperture: float = 5e-3
    solver: SolverSettings = field(default_factory=SolverSettings)

    def spline_config(self) -> SplineConfig:
        return SplineConfig(num_control=self.control_points, degree=3)

    def grasp_config(self) -> GraspConfig:
        return GraspConfig(
            slide_prob=self.slide_prob,
            sigma_capture=self.sigma_capture,
            grid_size=self.grid,
            jaw_aperture=self.jaw_aperture,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["solver"] = asdict(self.solver)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SceneFileError(
                f"unknown config entries: {sorted(unknown)}", field="config"
            )
        kwargs = dict(data)
        if "solver" in kwargs and kwargs["solver"] is not None:
            solver_known = {f.name for f in fields(SolverSettings)}
            bad = set(kwargs["solver"]) - solver_known
            if bad:
                raise SceneFileError(
                    f"unknown solver entries: {sorted(bad)}", field="config.solver"
                )
            kwargs["solver"] = SolverSettings(**kwargs["solver"])
        return cls(**kwargs)

    def with_overrides(self, **kwargs) -> "PipelineConfig":
        """New config with the non-None entries applied."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates) if updates else self
