"""Throughput in simulated voxel steps per second."""

from __future__ import annotations

from dataclasses import dataclass

from ..vsr import VSRDescription
from .locomotion import LocomotionConfig, build_locomotion, run_locomotion


@dataclass(frozen=True)
class PerfReport:
    svsps: float
    wall_time: float
    n_voxels: int
    n_steps: int


def svsps(n_steps: int, n_voxels: int, wall_time: float) -> float:
    return n_steps * n_voxels / wall_time


def measure_svsps(description: VSRDescription, config: LocomotionConfig) -> PerfReport:
    """Time only the stepping loop; compilation is warmed up on a throwaway run."""
    warm = LocomotionConfig(duration=config.settings.dt * 4, control_step_interval=config.control_step_interval,
                            settings=config.settings, terrain=config.terrain, measures=config.measures)
    run_locomotion(description, warm)
    built = build_locomotion(description, config)
    built[0].substeps  # substep analysis is setup, not stepping
    timer: list = []
    run_locomotion(description, config, built=built, timer=timer)
    n_voxels = description.n_voxels
    wall = timer[0] if timer else float("nan")
    return PerfReport(svsps(config.n_steps, n_voxels, wall), wall, n_voxels, config.n_steps)
