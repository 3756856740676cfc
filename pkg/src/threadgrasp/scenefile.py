"""Scene and result documents: versioned JSON schemas and plot export.

A scene provides the camera, reliability and outlier settings, and exactly
one observation source: precomputed raw points, pre-ordered observations,
or a synthesis block (ground-truth curve plus noise model) that generates
fresh raw points per seed. Result documents capture the reconstruction, an
optional plan, and an optional simulated outcome; serialization is
deterministic apart from the timestamp field under ``meta``.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bspline import BSplineCurve, SplineConfig
from .camera import CameraModel
from .config import PipelineConfig
from .errors import SceneFileError
from .grasp import CsgPlan, GraspOutcome, Pose, capture_probability
from .observation import (
    Observation,
    OutlierParams,
    RawPoint,
    cluster_and_order,
    observations_from_positions,
    peak_similarity_filter,
)
from .reconstruct import IterationDiagnostics, ParamSet, ReconstructionResult
from .reliability import ReliabilityParams, ReliabilityRegion
from .synth import CurveSpec, GroundTruth, NoiseSpec, ground_truth_from_spec, synthesize_scene

SCENE_SCHEMA_VERSION = 1
RESULT_SCHEMA_VERSION = 1

SCENARIO_TAGS = ("Easy", "Medium", "Hard", "Singularity", "Occlusion", "Untagged")


def _vec(x) -> list:
    return np.asarray(x, dtype=float).tolist()


@dataclass(frozen=True)
class Synthesis:
    curve: CurveSpec
    noise: NoiseSpec
    num_points: int = 20

    def to_dict(self) -> dict:
        return {
            "curve": {
                "kind": self.curve.kind,
                "center": list(self.curve.center),
                "length": self.curve.length,
                "amplitude": self.curve.amplitude,
                "depth_amplitude": self.curve.depth_amplitude,
                "cycles": self.curve.cycles,
            },
            "noise": {
                "sigma_px": self.noise.sigma_px,
                "sigma_z": self.noise.sigma_z,
                "noisy_segments": [list(s) for s in self.noise.noisy_segments],
                "gaps": [list(g) for g in self.noise.gaps],
                "ambiguous_fraction": self.noise.ambiguous_fraction,
            },
            "num_points": self.num_points,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Synthesis":
        try:
            curve = CurveSpec(
                kind=data["curve"].get("kind", "sine"),
                center=tuple(data["curve"].get("center", (0.0, 0.0, 0.15))),
                length=data["curve"].get("length", 0.06),
                amplitude=data["curve"].get("amplitude", 0.01),
                depth_amplitude=data["curve"].get("depth_amplitude", 0.0),
                cycles=data["curve"].get("cycles", 1.5),
            )
            noise_d = data.get("noise", {})
            noise = NoiseSpec(
                sigma_px=noise_d.get("sigma_px", 0.0),
                sigma_z=noise_d.get("sigma_z", 0.0),
                noisy_segments=tuple(
                    tuple(s) for s in noise_d.get("noisy_segments", [])
                ),
                gaps=tuple(tuple(g) for g in noise_d.get("gaps", [])),
                ambiguous_fraction=noise_d.get("ambiguous_fraction", 0.0),
            )
            return cls(curve=curve, noise=noise, num_points=data.get("num_points", 20))
        except (KeyError, TypeError, ValueError) as exc:
            raise SceneFileError(f"bad synthesis block: {exc}", field="synthesis")


@dataclass
class SceneFile:
    """Parsed scene: camera, pipeline knobs, and one observation source."""

    camera: CameraModel
    name: str = "scene"
    scenario: str = "Untagged"
    reliability: ReliabilityParams = field(default_factory=ReliabilityParams)
    outlier: OutlierParams = field(default_factory=OutlierParams)
    cluster_radius_px: float = 4.0
    raw_points: list[RawPoint] | None = None
    observations: list[Observation] | None = None
    synthesis: Synthesis | None = None
    ground_truth_spline: BSplineCurve | None = None

    def __post_init__(self):
        sources = [
            self.raw_points is not None,
            self.observations is not None,
            self.synthesis is not None,
        ]
        if sum(sources) != 1:
            raise SceneFileError(
                "exactly one of raw_points / observations / synthesis required"
            )
        if self.scenario not in SCENARIO_TAGS:
            raise SceneFileError(
                f"scenario must be one of {SCENARIO_TAGS}", field="scenario"
            )

    def realize(self, seed: int = 0) -> tuple[list[Observation], GroundTruth | None]:
        """Materialize the ordered observations (and ground truth if known).

        For synthesis scenes the seed drives the noise; for the other
        sources it is ignored.
        """
        if self.observations is not None:
            return list(self.observations), self._ground_truth()
        if self.raw_points is not None:
            kept = peak_similarity_filter(self.raw_points, self.outlier)
            return cluster_and_order(kept, self.cluster_radius_px), self._ground_truth()
        points, truth = synthesize_scene(
            self.synthesis.curve,
            self.synthesis.noise,
            self.camera,
            self.synthesis.num_points,
            seed,
        )
        kept = peak_similarity_filter(points, self.outlier)
        return cluster_and_order(kept, self.cluster_radius_px), truth

    def _ground_truth(self) -> GroundTruth | None:
        if self.ground_truth_spline is None:
            return None
        samples = self.ground_truth_spline.evaluate(np.linspace(0.0, 1.0, 2048))
        return GroundTruth(samples=samples, spline=self.ground_truth_spline)

    def ground_truth(self) -> GroundTruth | None:
        """Ground truth regardless of observation source, if available."""
        if self.synthesis is not None:
            return ground_truth_from_spec(self.synthesis.curve)
        return self._ground_truth()

    def to_dict(self) -> dict:
        d: dict = {
            "schema_version": SCENE_SCHEMA_VERSION,
            "name": self.name,
            "scenario": self.scenario,
            "camera": {
                "projection": _vec(self.camera.projection),
                "image_width": self.camera.image_width,
                "image_height": self.camera.image_height,
                "min_depth": self.camera.min_depth,
            },
            "reliability": {
                "eps_u": self.reliability.eps_u,
                "eps_v": self.reliability.eps_v,
                "window": self.reliability.window,
                "eps_z_floor": self.reliability.eps_z_floor,
            },
            "outlier": {
                "eps1": self.outlier.eps1,
                "eps2": self.outlier.eps2,
                "eps3": self.outlier.eps3,
                "eps4": self.outlier.eps4,
            },
            "cluster_radius_px": self.cluster_radius_px,
        }
        if self.raw_points is not None:
            d["raw_points"] = [
                {
                    "position": _vec(p.position),
                    "cost_best": p.cost_best,
                    "cost_second": p.cost_second,
                    "pixel": _vec(p.pixel),
                }
                for p in self.raw_points
            ]
        if self.observations is not None:
            d["observations"] = [
                {"position": _vec(o.position), "pixel": _vec(o.pixel)}
                for o in self.observations
            ]
        if self.synthesis is not None:
            d["synthesis"] = self.synthesis.to_dict()
        if self.ground_truth_spline is not None:
            d["ground_truth"] = _spline_to_dict(self.ground_truth_spline)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SceneFile":
        if not isinstance(data, dict):
            raise SceneFileError("scene document must be a JSON object")
        try:
            cam_d = data["camera"]
            camera = CameraModel(
                projection=np.asarray(cam_d["projection"], dtype=float),
                image_width=int(cam_d.get("image_width", 640)),
                image_height=int(cam_d.get("image_height", 480)),
                min_depth=float(cam_d.get("min_depth", 1e-3)),
            )
        except KeyError as exc:
            raise SceneFileError(f"missing camera entry: {exc}", field="camera")
        except (TypeError, ValueError) as exc:
            raise SceneFileError(f"bad camera block: {exc}", field="camera")

        rel_d = data.get("reliability", {})
        out_d = data.get("outlier", {})
        try:
            reliability = ReliabilityParams(
                eps_u=rel_d.get("eps_u", 3.0),
                eps_v=rel_d.get("eps_v", 3.0),
                window=rel_d.get("window", 7),
                eps_z_floor=rel_d.get("eps_z_floor", 5e-4),
            )
            outlier = OutlierParams(
                eps1=out_d.get("eps1", 1.0),
                eps2=out_d.get("eps2", 1.0),
                eps3=out_d.get("eps3", 0.0),
                eps4=out_d.get("eps4", 0.5),
            )
        except ValueError as exc:
            raise SceneFileError(str(exc), field="reliability/outlier")

        raw_points = None
        if "raw_points" in data:
            try:
                raw_points = [
                    RawPoint(
                        position=p["position"],
                        cost_best=float(p["cost_best"]),
                        cost_second=float(p["cost_second"]),
                        pixel=p["pixel"],
                    )
                    for p in data["raw_points"]
                ]
            except (KeyError, TypeError, ValueError) as exc:
                raise SceneFileError(f"bad raw point: {exc}", field="raw_points")

        observations = None
        if "observations" in data:
            try:
                obs_raw = data["observations"]
                observations = observations_from_positions(
                    [o["position"] for o in obs_raw],
                    [o["pixel"] for o in obs_raw],
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise SceneFileError(f"bad observation: {exc}", field="observations")

        synthesis = (
            Synthesis.from_dict(data["synthesis"]) if "synthesis" in data else None
        )
        gt = None
        if "ground_truth" in data:
            gt = _spline_from_dict(data["ground_truth"], field="ground_truth")

        return cls(
            camera=camera,
            name=data.get("name", "scene"),
            scenario=data.get("scenario", "Untagged"),
            reliability=reliability,
            outlier=outlier,
            cluster_radius_px=float(data.get("cluster_radius_px", 4.0)),
            raw_points=raw_points,
            observations=observations,
            synthesis=synthesis,
            ground_truth_spline=gt,
        )

    @classmethod
    def load(cls, path: str | Path) -> "SceneFile":
        return cls.from_dict(_read_json(path))

    def save(self, path: str | Path) -> None:
        _write_json(path, self.to_dict())


def _spline_to_dict(spline: BSplineCurve) -> dict:
    return {
        "num_control": spline.config.num_control,
        "degree": spline.config.degree,
        "knots": _vec(spline.config.knots),
        "control_points": _vec(spline.control_points),
    }


def _spline_from_dict(data: dict, field: str = "spline") -> BSplineCurve:
    try:
        config = SplineConfig(
            num_control=int(data["num_control"]), degree=int(data.get("degree", 3))
        )
        spline = BSplineCurve(
            config, np.asarray(data["control_points"], dtype=float)
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneFileError(f"bad spline block: {exc}", field=field)
    if "knots" in data and not np.allclose(
        np.asarray(data["knots"], dtype=float), config.knots, atol=1e-12
    ):
        raise SceneFileError("knots are not clamped uniform", field=f"{field}.knots")
    return spline


def _read_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SceneFileError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise SceneFileError(f"invalid JSON in {path}: {exc}")


def _write_json(path: str | Path, data: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Result documents
# ---------------------------------------------------------------------------


@dataclass
class ResultDocument:
    """Reconstruction output plus optional plan and simulation outcome."""

    reconstruction: ReconstructionResult
    camera: CameraModel
    config: PipelineConfig
    scene_name: str = "scene"
    scenario: str = "Untagged"
    plan: CsgPlan | None = None
    simulation: GraspOutcome | None = None
    created_utc: str | None = None

    def to_dict(self) -> dict:
        rec = self.reconstruction
        d: dict = {
            "schema_version": RESULT_SCHEMA_VERSION,
            "meta": {
                "tool": "threadgrasp",
                "tool_version": __version__,
                "created_utc": self.created_utc
                or _dt.datetime.now(_dt.timezone.utc).isoformat(),
                "scene_name": self.scene_name,
                "scenario": self.scenario,
            },
            "config": self.config.to_dict(),
            "camera": {
                "projection": _vec(self.camera.projection),
                "image_width": self.camera.image_width,
                "image_height": self.camera.image_height,
                "min_depth": self.camera.min_depth,
            },
            "reconstruction": {
                "spline": _spline_to_dict(rec.spline),
                "params": _vec(rec.params.values),
                "regions": [
                    {
                        "center": _vec(r.center),
                        "eps_u": r.eps_u,
                        "eps_v": r.eps_v,
                        "eps_z": r.eps_z,
                    }
                    for r in rec.regions
                ],
                "diagnostics": {
                    "iterations": rec.iterations,
                    "speed_cv": rec.speed_cv,
                    "total_arc_length": rec.total_arc_length,
                    "widenings": rec.widenings,
                    "per_iteration": [
                        {
                            "iteration": it.iteration,
                            "objective": it.objective,
                            "qp_status": it.qp_status,
                            "qp_iterations": it.qp_iterations,
                            "speed_cv": it.speed_cv,
                            "max_violation": it.max_violation,
                            "is_final_resolve": it.is_final_resolve,
                        }
                        for it in rec.per_iteration_diagnostics
                    ],
                },
            },
            "plan": None,
            "simulation": None,
        }
        if self.plan is not None:
            d["plan"] = {
                "waypoint_params": _vec(self.plan.waypoint_params),
                "waypoints": [
                    {
                        "position": _vec(p.position),
                        "quaternion_wxyz": _vec(_rotation_to_quat(p.rotation)),
                    }
                    for p in self.plan.waypoint_poses
                ],
                "success_probability": self.plan.success_probability,
                "capture_param": self.plan.capture_param,
                "goal_param": self.plan.goal_param,
            }
        if self.simulation is not None:
            d["simulation"] = {"outcome": self.simulation.value}
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ResultDocument":
        if not isinstance(data, dict) or "reconstruction" not in data:
            raise SceneFileError("result document missing reconstruction")
        try:
            cam_d = data["camera"]
            camera = CameraModel(
                projection=np.asarray(cam_d["projection"], dtype=float),
                image_width=int(cam_d.get("image_width", 640)),
                image_height=int(cam_d.get("image_height", 480)),
                min_depth=float(cam_d.get("min_depth", 1e-3)),
            )
            config = PipelineConfig.from_dict(data.get("config", {}))
            rec_d = data["reconstruction"]
            spline = _spline_from_dict(rec_d["spline"], field="reconstruction.spline")
            params = ParamSet(np.asarray(rec_d["params"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise SceneFileError(f"bad result document: {exc}")

        regions = _regions_from_dicts(rec_d["regions"], camera)
        diag = rec_d.get("diagnostics", {})
        rec = ReconstructionResult(
            spline=spline,
            params=params,
            regions=regions,
            iterations=int(diag.get("iterations", 0)),
            speed_cv=float(diag.get("speed_cv", 0.0)),
            per_iteration_diagnostics=[
                IterationDiagnostics(
                    iteration=int(e["iteration"]),
                    objective=float(e["objective"]),
                    qp_status=str(e["qp_status"]),
                    qp_iterations=int(e["qp_iterations"]),
                    speed_cv=float(e["speed_cv"]),
                    max_violation=float(e["max_violation"]),
                    is_final_resolve=bool(e.get("is_final_resolve", False)),
                )
                for e in diag.get("per_iteration", [])
            ],
            total_arc_length=float(diag.get("total_arc_length", 0.0)),
            widenings=int(diag.get("widenings", 0)),
        )
        plan = None
        if data.get("plan") is not None:
            p = data["plan"]
            try:
                plan = CsgPlan(
                    waypoint_params=np.asarray(p["waypoint_params"], dtype=float),
                    waypoint_poses=tuple(
                        Pose(
                            position=np.asarray(w["position"], dtype=float),
                            rotation=_quat_to_rotation(
                                np.asarray(w["quaternion_wxyz"], dtype=float)
                            ),
                        )
                        for w in p["waypoints"]
                    ),
                    success_probability=float(p["success_probability"]),
                    capture_param=float(p["capture_param"]),
                    goal_param=float(p["goal_param"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise SceneFileError(f"bad plan block: {exc}", field="plan")
        simulation = None
        if data.get("simulation") is not None:
            simulation = GraspOutcome(data["simulation"]["outcome"])
        return cls(
            reconstruction=rec,
            camera=camera,
            config=config,
            scene_name=data.get("meta", {}).get("scene_name", "scene"),
            scenario=data.get("meta", {}).get("scenario", "Untagged"),
            plan=plan,
            simulation=simulation,
            created_utc=data.get("meta", {}).get("created_utc"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ResultDocument":
        return cls.from_dict(_read_json(path))

    def save(self, path: str | Path) -> None:
        _write_json(path, self.to_dict())


def _regions_from_dicts(region_dicts: list[dict], camera: CameraModel) -> list[ReliabilityRegion]:
    """Rebuild full regions (half-spaces included) from their summaries."""
    _E3 = np.array([0.0, 0.0, 1.0])
    regions = []
    for r in region_dicts:
        center = np.asarray(r["center"], dtype=float)
        eps_u, eps_v, eps_z = float(r["eps_u"]), float(r["eps_v"]), float(r["eps_z"])
        pixel_rows = camera.halfspace_from_pixel_bound(center, eps_u, eps_v)
        rows = np.array([row for row, _ in pixel_rows] + [_E3, -_E3])
        offsets = np.array(
            [off for _, off in pixel_rows]
            + [center[2] + eps_z, -(center[2] - eps_z)]
        )
        regions.append(
            ReliabilityRegion(
                center=center,
                eps_u=eps_u,
                eps_v=eps_v,
                eps_z=eps_z,
                halfspace_rows=rows,
                halfspace_offsets=offsets,
            )
        )
    return regions


def _rotation_to_quat(R: np.ndarray) -> np.ndarray:
    """Rotation matrix to unit quaternion (w, x, y, z), w >= 0."""
    from scipy.spatial.transform import Rotation

    q = Rotation.from_matrix(R).as_quat()  # (x, y, z, w)
    wxyz = np.array([q[3], q[0], q[1], q[2]])
    return -wxyz if wxyz[0] < 0 else wxyz


def _quat_to_rotation(wxyz: np.ndarray) -> np.ndarray:
    from scipy.spatial.transform import Rotation

    return Rotation.from_quat([wxyz[1], wxyz[2], wxyz[3], wxyz[0]]).as_matrix()


def write_plot_csv(
    path: str | Path, result: ReconstructionResult, config: PipelineConfig
) -> None:
    """Sampled curve with a per-sample confidence scalar in [0, 1].

    Columns: s, x, y, z, confidence. Confidence is the capture-probability
    gaussian of the interpolated depth bound, for low-to-high confidence
    color ramps.
    """
    s = np.linspace(0.0, 1.0, config.grid)
    pts = result.spline.evaluate(s)
    conf = np.asarray(capture_probability(result, s, config.grasp_config()))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("s,x,y,z,confidence\n")
        for i in range(len(s)):
            fh.write(
                f"{s[i]:.10g},{pts[i, 0]:.10g},{pts[i, 1]:.10g},"
                f"{pts[i, 2]:.10g},{conf[i]:.10g}\n"
            )
