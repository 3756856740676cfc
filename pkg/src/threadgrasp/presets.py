"""Built-in synthetic scene presets mirroring the evaluation scenarios.

Difficulty climbs from a clean flat sine to heavy depth-noise bands; the
singularity preset sends a stretch of thread along the camera axis and the
occlusion preset drops a mid-thread span.
"""

from __future__ import annotations

import numpy as np

from .camera import CameraModel
from .observation import observations_from_positions
from .scenefile import SceneFile, Synthesis
from .synth import CurveSpec, NoiseSpec


def default_camera() -> CameraModel:
    return CameraModel(
        projection=np.array([[800.0, 0.0, 320.0], [0.0, 800.0, 240.0]]),
        image_width=640,
        image_height=480,
        min_depth=1e-3,
    )


def _synth_scene(name, scenario, curve, noise, num_points=20) -> SceneFile:
    return SceneFile(
        camera=default_camera(),
        name=name,
        scenario=scenario,
        synthesis=Synthesis(curve=curve, noise=noise, num_points=num_points),
    )


def preset_scene(preset: str) -> SceneFile:
    """A ready-made scene by name.

    Names: line, easy, medium, hard, singularity, occlusion.
    """
    base = dict(center=(0.0, 0.0, 0.15), length=0.06)
    if preset == "line":
        return _synth_scene(
            "line",
            "Easy",
            CurveSpec(kind="line", **base),
            NoiseSpec(),
        )
    if preset == "easy":
        return _synth_scene(
            "easy",
            "Easy",
            CurveSpec(kind="sine", amplitude=0.010, cycles=1.25, **base),
            NoiseSpec(sigma_px=0.3, sigma_z=4e-4),
        )
    if preset == "medium":
        return _synth_scene(
            "medium",
            "Medium",
            CurveSpec(kind="sine", amplitude=0.012, cycles=1.5, **base),
            NoiseSpec(sigma_px=0.3, sigma_z=8e-4, noisy_segments=((0.4, 0.6, 3.0),)),
        )
    if preset == "hard":
        return _synth_scene(
            "hard",
            "Hard",
            CurveSpec(kind="sine", amplitude=0.012, cycles=1.5, **base),
            NoiseSpec(sigma_px=0.3, sigma_z=1e-3, noisy_segments=((0.45, 0.8, 8.0),)),
        )
    if preset == "singularity":
        return _synth_scene(
            "singularity",
            "Singularity",
            CurveSpec(
                kind="zbend", amplitude=0.008, depth_amplitude=0.02, cycles=1.0, **base
            ),
            NoiseSpec(sigma_px=0.3, sigma_z=8e-4, noisy_segments=((0.35, 0.65, 5.0),)),
        )
    if preset == "occlusion":
        return _synth_scene(
            "occlusion",
            "Occlusion",
            CurveSpec(kind="sine", amplitude=0.011, cycles=1.25, **base),
            NoiseSpec(
                sigma_px=0.3,
                sigma_z=6e-4,
                noisy_segments=((0.15, 0.3, 3.0),),
                gaps=((0.42, 0.62),),
            ),
            num_points=26,
        )
    raise ValueError(f"unknown preset {preset!r}")


PRESET_NAMES = ("line", "easy", "medium", "hard", "singularity", "occlusion")


def line_observation_scene(n: int = 12) -> SceneFile:
    """Scene carrying explicit pre-ordered observations on a straight line."""
    cam = default_camera()
    t = np.linspace(0.0, 1.0, n)
    positions = np.column_stack(
        [-0.03 + 0.06 * t, np.zeros(n), np.full(n, 0.15)]
    )
    pixels = cam.project(positions)
    return SceneFile(
        camera=cam,
        name="line-observations",
        scenario="Easy",
        observations=observations_from_positions(positions, pixels),
    )
