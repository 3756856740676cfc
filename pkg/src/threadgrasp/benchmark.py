"""Benchmark harness: direct vs capture-slide-grasp over a scene suite.

For every scene and seed, reconstructs the thread and attempts both grasp
strategies at evenly spaced goals along the curve, simulating each attempt
against the scene's ground truth. Success rates aggregate per scenario tag
and in total. Scenes that fail to reconstruct are logged and skipped; the
report is a pure function of the inputs and seeds (no timestamps), so
repeated runs are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import SceneFileError, ThreadGraspError
from .grasp import GraspOutcome, direct_plan, plan, simulate_grasp
from .reconstruct import reconstruct
from .scenefile import SceneFile

DEFAULT_GOALS_PER_SCENE = 20


@dataclass
class StrategyTally:
    trials: int = 0
    successes: int = 0
    capture_misses: int = 0
    slips: int = 0

    def record(self, outcome: GraspOutcome) -> None:
        self.trials += 1
        if outcome is GraspOutcome.SUCCESS:
            self.successes += 1
        elif outcome is GraspOutcome.CAPTURE_MISS:
            self.capture_misses += 1
        else:
            self.slips += 1

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "successes": self.successes,
            "capture_misses": self.capture_misses,
            "slips": self.slips,
            "success_rate": round(self.rate, 6),
        }


@dataclass
class BenchmarkReport:
    seeds: int
    goals_per_scene: int
    scenarios: dict[str, dict[str, StrategyTally]] = field(default_factory=dict)
    errors: list[dict] = field(default_factory=list)

    def tally(self, scenario: str, strategy: str) -> StrategyTally:
        per = self.scenarios.setdefault(
            scenario, {"direct": StrategyTally(), "csg": StrategyTally()}
        )
        return per[strategy]

    def total(self, strategy: str) -> StrategyTally:
        agg = StrategyTally()
        for per in self.scenarios.values():
            t = per[strategy]
            agg.trials += t.trials
            agg.successes += t.successes
            agg.capture_misses += t.capture_misses
            agg.slips += t.slips
        return agg

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "seeds": self.seeds,
            "goals_per_scene": self.goals_per_scene,
            "scenarios": {
                tag: {name: t.to_dict() for name, t in per.items()}
                for tag, per in sorted(self.scenarios.items())
            },
            "total": {
                "direct": self.total("direct").to_dict(),
                "csg": self.total("csg").to_dict(),
            },
            "errors": self.errors,
        }

    def table(self) -> str:
        """Success-rate table: one row per strategy, one column per scenario."""
        tags = sorted(self.scenarios)
        widths = [max(len(t), 7) for t in tags]
        lines = []
        header = "Strategy        " + "  ".join(
            t.ljust(w) for t, w in zip(tags, widths)
        )
        lines.append(header + "  Total")
        for name, label in (("direct", "Direct grasping"), ("csg", "CSG grasping   ")):
            cells = []
            for t, w in zip(tags, widths):
                tally = self.scenarios[t][name]
                cells.append(f"{100 * tally.rate:.1f}%".ljust(w))
            total = self.total(name)
            lines.append(f"{label} " + "  ".join(cells) + f"  {100 * total.rate:.1f}%")
        return "\n".join(lines)


def run_benchmark(
    scene_paths: list[str | Path],
    seeds: int,
    config: PipelineConfig | None = None,
    goals_per_scene: int = DEFAULT_GOALS_PER_SCENE,
) -> BenchmarkReport:
    """Reconstruct-and-grasp sweep over scenes x seeds x goals."""
    config = config or PipelineConfig()
    report = BenchmarkReport(seeds=seeds, goals_per_scene=goals_per_scene)
    gcfg = config.grasp_config()
    goals = np.linspace(0.0, 1.0, goals_per_scene)

    for path in sorted(str(p) for p in scene_paths):
        try:
            scene = SceneFile.load(path)
        except SceneFileError as exc:
            report.errors.append({"scene": Path(path).name, "error": str(exc)})
            continue
        truth = scene.ground_truth()
        if truth is None:
            report.errors.append(
                {"scene": scene.name, "error": "no ground truth; cannot simulate"}
            )
            continue
        for seed in range(seeds):
            try:
                observations, truth_seeded = scene.realize(seed)
                truth_i = truth_seeded or truth
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
            except ThreadGraspError as exc:
                report.errors.append(
                    {"scene": scene.name, "seed": seed, "error": str(exc)}
                )
                continue
            for goal in goals:
                report.tally(scene.scenario, "direct").record(
                    simulate_grasp(direct_plan(result, goal, gcfg), truth_i, gcfg)
                )
                report.tally(scene.scenario, "csg").record(
                    simulate_grasp(plan(result, goal, gcfg), truth_i, gcfg)
                )
    return report
