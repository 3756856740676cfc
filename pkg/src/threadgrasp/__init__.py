"""Reliability-driven reconstruction of thin deformable curves.

Fits minimum-variation cubic B-splines to noisy ordered 3D observations by
iterating quadratic programs constrained to per-observation reliability
boxes, then plans capture-slide-grasp gripper trajectories that maximize
grasp-success probability, with a built-in simulator for evaluation.
"""

__version__ = "0.1.0"

from .bspline import (
    BSplineCurve,
    MvcObjective,
    SplineConfig,
    build_mvc_matrix,
    constraint_rows,
)
from .camera import CameraModel
from .config import PipelineConfig
from .errors import (
    AmbiguousOrdering,
    CurveBehindCamera,
    DegenerateDenominator,
    DegenerateVelocity,
    DegreeZero,
    DepthTooSmall,
    DuplicateObservations,
    IndexOutOfRange,
    InfeasibleAfterRetries,
    InfeasibleProblem,
    InvalidInterval,
    NumericalFailure,
    SceneFileError,
    ThreadGraspError,
    TooFewObservations,
    TooLarge,
)
from .grasp import (
    CsgPlan,
    GraspConfig,
    GraspOutcome,
    Pose,
    capture_probability,
    direct_plan,
    gripper_pose,
    plan,
    simulate_grasp,
    trajectory_probability,
)
from .observation import (
    Observation,
    OutlierParams,
    RawPoint,
    cluster_and_order,
    observations_from_positions,
    peak_similarity,
    peak_similarity_filter,
)
from .qpsolver import (
    LcqpProblem,
    LcqpSolution,
    SolveStatus,
    SolverSettings,
    active_set_oracle,
    solve,
)
from .reconstruct import (
    ParamSet,
    ReconstructionResult,
    init_params,
    mvc_loss_oracle,
    reconstruct,
    speed_cv,
    update_params,
)
from .reliability import (
    ReliabilityParams,
    ReliabilityRegion,
    build_regions,
    depth_bound,
    region_diagonal,
)
from .synth import (
    CurveSpec,
    GroundTruth,
    NoiseSpec,
    ground_truth_from_spec,
    synthesize_scene,
)

__all__ = [
    "__version__",
    "AmbiguousOrdering",
    "BSplineCurve",
    "CameraModel",
    "CsgPlan",
    "CurveBehindCamera",
    "CurveSpec",
    "DegenerateDenominator",
    "DegenerateVelocity",
    "DegreeZero",
    "DepthTooSmall",
    "DuplicateObservations",
    "GraspConfig",
    "GraspOutcome",
    "GroundTruth",
    "IndexOutOfRange",
    "InfeasibleAfterRetries",
    "InfeasibleProblem",
    "InvalidInterval",
    "LcqpProblem",
    "LcqpSolution",
    "MvcObjective",
    "NoiseSpec",
    "NumericalFailure",
    "Observation",
    "OutlierParams",
    "ParamSet",
    "PipelineConfig",
    "Pose",
    "RawPoint",
    "ReconstructionResult",
    "ReliabilityParams",
    "ReliabilityRegion",
    "SceneFileError",
    "SolveStatus",
    "SolverSettings",
    "SplineConfig",
    "ThreadGraspError",
    "TooFewObservations",
    "TooLarge",
    "active_set_oracle",
    "build_mvc_matrix",
    "build_regions",
    "capture_probability",
    "cluster_and_order",
    "constraint_rows",
    "depth_bound",
    "direct_plan",
    "ground_truth_from_spec",
    "gripper_pose",
    "init_params",
    "mvc_loss_oracle",
    "observations_from_positions",
    "peak_similarity",
    "peak_similarity_filter",
    "plan",
    "reconstruct",
    "region_diagonal",
    "simulate_grasp",
    "solve",
    "speed_cv",
    "synthesize_scene",
    "trajectory_probability",
    "update_params",
]
