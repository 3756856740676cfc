"""Command-line front end.

Subcommands: ``reconstruct`` (scene to result document plus plot CSV),
``plan`` (append a grasp plan to a result), ``simulate`` (score a planned
result against a scene's ground truth), ``benchmark`` (direct-vs-CSG sweep
over a scene suite), and ``synth`` (write preset scene files).

Exit codes: 0 success, 1 pipeline error, 2 input error, 3 reconstruction
infeasible after retries. Errors print one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .benchmark import run_benchmark
from .config import PipelineConfig
from .errors import InfeasibleAfterRetries, SceneFileError, ThreadGraspError
from .grasp import simulate_grasp
from .grasp import plan as plan_grasp
from .presets import PRESET_NAMES, preset_scene
from .reconstruct import reconstruct
from .scenefile import ResultDocument, SceneFile, _read_json, _write_json, write_plot_csv

EXIT_OK = 0
EXIT_PIPELINE = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


def _fail(code: int, error: str, message: str, **extra) -> int:
    payload = {"error": error, "message": message, **extra}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig()
    if getattr(args, "config", None):
        config = PipelineConfig.from_dict(_read_json(args.config))
    return config.with_overrides(
        max_iters=getattr(args, "max_iters", None),
        control_points=getattr(args, "control_points", None),
        slide_prob=getattr(args, "slide_prob", None),
        grid=getattr(args, "grid", None),
        quad_order=getattr(args, "quad_order", None),
    )


def cmd_reconstruct(args) -> int:
    try:
        config = _load_config(args)
        scene = SceneFile.load(args.scene)
        observations, _ = scene.realize(seed=args.seed)
    except SceneFileError as exc:
        return _fail(EXIT_INPUT, "scene_error", str(exc), field=exc.field)
    except ThreadGraspError as exc:
        return _fail(EXIT_PIPELINE, type(exc).__name__, str(exc))
    try:
        result = reconstruct(
            observations,
            scene.camera,
            config=config.spline_config(),
            rel_params=scene.reliability,
            solver_settings=config.solver,
            max_iters=config.max_iters,
            speed_tol=config.speed_tol,
            speed_samples=config.speed_samples,
            quad_order=config.quad_order,
        )
    except InfeasibleAfterRetries as exc:
        return _fail(EXIT_INFEASIBLE, "infeasible_after_retries", str(exc))
    except ThreadGraspError as exc:
        return _fail(EXIT_PIPELINE, type(exc).__name__, str(exc))

    doc = ResultDocument(
        reconstruction=result,
        camera=scene.camera,
        config=config,
        scene_name=scene.name,
        scenario=scene.scenario,
    )
    out = Path(args.out)
    doc.save(out)
    plot_path = args.plot or out.with_suffix(".plot.csv")
    write_plot_csv(plot_path, result, config)
    print(
        f"reconstructed {scene.name}: {len(observations)} observations, "
        f"{result.iterations} iterations, speed_cv {result.speed_cv:.4f}, "
        f"arc length {1000 * result.total_arc_length:.1f} mm -> {out}"
    )
    return EXIT_OK


def cmd_plan(args) -> int:
    if not 0.0 <= args.goal <= 1.0:
        return _fail(EXIT_INPUT, "bad_goal", f"goal {args.goal} outside [0, 1]")
    try:
        doc = ResultDocument.load(args.result)
    except SceneFileError as exc:
        return _fail(EXIT_INPUT, "result_error", str(exc), field=exc.field)
    config = doc.config.with_overrides(
        slide_prob=getattr(args, "slide_prob", None),
        grid=getattr(args, "grid", None),
    )
    try:
        csg = plan_grasp(doc.reconstruction, args.goal, config.grasp_config())
    except ThreadGraspError as exc:
        return _fail(EXIT_PIPELINE, type(exc).__name__, str(exc))
    doc.plan = csg
    doc.config = config
    doc.save(args.out or args.result)
    print(
        f"plan: capture at s={csg.capture_param:.4f}, {csg.num_waypoints} waypoint(s), "
        f"success probability {csg.success_probability:.4f}"
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        doc = ResultDocument.load(args.result)
        scene = SceneFile.load(args.scene)
    except SceneFileError as exc:
        return _fail(EXIT_INPUT, "input_error", str(exc), field=exc.field)
    if doc.plan is None:
        return _fail(EXIT_INPUT, "no_plan", "result document carries no plan")
    truth = scene.ground_truth()
    if truth is None:
        return _fail(EXIT_INPUT, "no_ground_truth", "scene has no ground truth")
    outcome = simulate_grasp(doc.plan, truth, doc.config.grasp_config())
    doc.simulation = outcome
    doc.save(args.out or args.result)
    print(f"simulated grasp: {outcome.value}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    try:
        config = _load_config(args)
    except SceneFileError as exc:
        return _fail(EXIT_INPUT, "config_error", str(exc), field=exc.field)
    suite = Path(args.suite)
    if not suite.is_dir():
        return _fail(EXIT_INPUT, "no_suite", f"not a directory: {suite}")
    scene_paths = sorted(suite.glob("*.json"))
    if not scene_paths:
        return _fail(EXIT_INPUT, "empty_suite", f"no *.json scenes under {suite}")
    report = run_benchmark(
        scene_paths, seeds=args.seeds, config=config, goals_per_scene=args.goals
    )
    payload = report.to_dict()
    payload["config"] = config.to_dict()
    _write_json(args.out, payload)
    print(report.table())
    if report.errors:
        print(f"({len(report.errors)} scene run(s) skipped; see report errors)")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        scene = preset_scene(args.preset)
    except ValueError as exc:
        return _fail(EXIT_INPUT, "bad_preset", str(exc))
    if args.bake:
        from .synth import synthesize_scene

        points, truth = synthesize_scene(
            scene.synthesis.curve,
            scene.synthesis.noise,
            scene.camera,
            scene.synthesis.num_points,
            args.seed,
        )
        scene = SceneFile(
            camera=scene.camera,
            name=f"{scene.name}-seed{args.seed}",
            scenario=scene.scenario,
            reliability=scene.reliability,
            outlier=scene.outlier,
            cluster_radius_px=scene.cluster_radius_px,
            raw_points=points,
            ground_truth_spline=truth.spline,
        )
    scene.save(args.out)
    print(f"wrote scene '{scene.name}' -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="threadgrasp",
        description="Reliability-driven thread reconstruction and grasp planning",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rec = sub.add_parser("reconstruct", help="fit a spline to a scene")
    p_rec.add_argument("scene", help="scene JSON file")
    p_rec.add_argument("--config", help="pipeline config JSON")
    p_rec.add_argument("--seed", type=int, default=0, help="synthesis seed")
    p_rec.add_argument("--out", required=True, help="result document path")
    p_rec.add_argument("--plot", help="plot CSV path (default: alongside --out)")
    p_rec.add_argument("--max-iters", type=int, dest="max_iters")
    p_rec.add_argument("--control-points", type=int, dest="control_points")
    p_rec.add_argument("--quad-order", type=int, dest="quad_order")
    p_rec.set_defaults(func=cmd_reconstruct)

    p_plan = sub.add_parser("plan", help="plan a grasp on a reconstruction")
    p_plan.add_argument("result", help="result document from 'reconstruct'")
    p_plan.add_argument("--goal", type=float, required=True, help="goal parameter in [0, 1]")
    p_plan.add_argument("--out", help="output path (default: in place)")
    p_plan.add_argument("--slide-prob", type=float, dest="slide_prob")
    p_plan.add_argument("--grid", type=int, dest="grid")
    p_plan.set_defaults(func=cmd_plan)

    p_sim = sub.add_parser("simulate", help="simulate a planned grasp against ground truth")
    p_sim.add_argument("result", help="result document with a plan")
    p_sim.add_argument("--scene", required=True, help="scene file with ground truth")
    p_sim.add_argument("--out", help="output path (default: in place)")
    p_sim.set_defaults(func=cmd_simulate)

    p_bench = sub.add_parser("benchmark", help="direct-vs-CSG sweep over a scene suite")
    p_bench.add_argument("suite", help="directory of scene JSON files")
    p_bench.add_argument("--seeds", type=int, default=10)
    p_bench.add_argument("--goals", type=int, default=20, help="goals per scene")
    p_bench.add_argument("--config", help="pipeline config JSON")
    p_bench.add_argument("--out", required=True, help="report JSON path")
    p_bench.add_argument("--max-iters", type=int, dest="max_iters")
    p_bench.add_argument("--control-points", type=int, dest="control_points")
    p_bench.add_argument("--slide-prob", type=float, dest="slide_prob")
    p_bench.add_argument("--grid", type=int, dest="grid")
    p_bench.add_argument("--quad-order", type=int, dest="quad_order")
    p_bench.set_defaults(func=cmd_benchmark)

    p_synth = sub.add_parser("synth", help="write a preset scene file")
    p_synth.add_argument("--preset", choices=PRESET_NAMES, default="medium")
    p_synth.add_argument("--seed", type=int, default=0, help="seed when baking points")
    p_synth.add_argument(
        "--bake",
        action="store_true",
        help="store generated raw points instead of the synthesis block",
    )
    p_synth.add_argument("--out", required=True, help="scene JSON path")
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SceneFileError as exc:
        return _fail(EXIT_INPUT, "input_error", str(exc), field=exc.field)
    except ThreadGraspError as exc:
        return _fail(EXIT_PIPELINE, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
