"""Cantilever rig: a beam of voxels clamped to a wall and loaded at its free end."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..control import TimeFunctionController
from ..errors import InvalidArgument, SimulationDiverged
from ..grid import Grid
from ..physics import Body, Settings, World
from ..voxel import MaterialSpec
from ..vsr import VSR, VSRDescription, assemble_vsr


@dataclass
class CantileverConfig:
    width: int = 10
    height: int = 4
    material: MaterialSpec = field(default_factory=MaterialSpec)
    force_magnitude: float = 30.0
    force_duration: float = math.inf
    total_time: float = 60.0
    gravity_enabled: bool = False
    settings: Settings = field(default_factory=Settings)
    sample_every: int = 2

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise InvalidArgument(f"beam must be at least 1x1, got {self.width}x{self.height}")
        if self.force_magnitude < 0 or not self.total_time > 0:
            raise InvalidArgument("force magnitude must be >= 0 and total time > 0")


@dataclass
class CantileverRig:
    world: World
    vsr: VSR
    wall: int
    loaded: np.ndarray        # bodies receiving the load
    tip: np.ndarray           # rows of vsr.mass_index for the rightmost voxels
    rest_y: float

    def tip_displacement(self) -> float:
        pos = self.world.positions[self.vsr.mass_index[self.tip]]
        return float(pos[..., 1].mean()) - self.rest_y


def build_cantilever(config: CantileverConfig) -> CantileverRig:
    settings = Settings(**{**config.settings.__dict__})
    if not config.gravity_enabled:
        settings.gravity = (0.0, 0.0)
    world = World(settings)
    body = Grid(config.width, config.height, config.material)
    neutral = TimeFunctionController(Grid(config.width, config.height, "0"))
    vsr = assemble_vsr(VSRDescription(body, neutral), (0.0, 0.0), world)
    l = config.material.side_length
    beam_h = config.height * l
    wall = world.add_body(Body(
        position=(-l / 2.0 - beam_h / 2.0, (beam_h - l) / 2.0),
        half_side=beam_h / 2.0, mass=0.0, kinematic=True, group=vsr.group,
    ))
    for row, (x, y) in enumerate(vsr.cells):
        if x == 0:
            for m in (0, 3):
                body_index = int(vsr.mass_index[row, m])
                world.add_weld(wall, body_index, tuple(world.positions[body_index]))
    tip = np.array([i for i, (x, _) in enumerate(vsr.cells) if x == config.width - 1], dtype=np.int64)
    loaded = vsr.mass_index[tip][:, [1, 2]].ravel()
    rest_y = float(world.positions[vsr.mass_index[tip]][..., 1].mean())
    return CantileverRig(world, vsr, wall, loaded, tip, rest_y)


def _run(config: CantileverConfig, sample: bool):
    rig = build_cantilever(config)
    world = rig.world
    dt = config.settings.dt
    n_steps = int(math.floor(config.total_time / dt + 1e-9))
    per_mass = config.force_magnitude / (2.0 * config.height)
    forces = np.tile([0.0, -per_mass], (len(rig.loaded), 1))
    series = [(0.0, 0.0)] if sample else None
    every = config.sample_every if sample else n_steps
    i = 0
    while i < n_steps:
        if per_mass > 0 and i * dt < config.force_duration:
            world.apply_forces(rig.loaded, forces)
            k = 1
        else:
            # unloaded: advance in one call up to the next sample
            k = min(every - i % every, n_steps - i)
        world.step(k)
        i += k
        if sample and i % every == 0:
            series.append((world.elapsed_time, rig.tip_displacement()))
    return rig, series


def run_cantilever_static(config: CantileverConfig) -> float:
    """Tip y-displacement after ``total_time`` under a constant load."""
    rig, _ = _run(config, sample=False)
    return rig.tip_displacement()


@dataclass
class CantileverSeries:
    times: np.ndarray
    displacements: np.ndarray
    diverged: bool = False


def run_cantilever_dynamic(config: CantileverConfig) -> CantileverSeries:
    """Tip displacement sampled every ``sample_every`` steps."""
    try:
        _, series = _run(config, sample=True)
        diverged = False
    except SimulationDiverged:
        series, diverged = [], True
    arr = np.array(series) if series else np.zeros((0, 2))
    return CantileverSeries(arr[:, 0], arr[:, 1], diverged)


def lobe_peaks(values: np.ndarray) -> np.ndarray:
    """Index of the largest |value| in each lobe between sign changes.

    Lobes are the half cycles of an oscillation about zero; a trailing
    lobe that is still open at the end of the signal is included.
    """
    v = np.asarray(values, dtype=np.float64)
    sign = np.sign(v)
    nz = np.flatnonzero(sign != 0)
    if len(nz) == 0:
        return np.zeros(0, dtype=np.int64)
    cuts = nz[1:][sign[nz[1:]] != sign[nz[:-1]]]
    bounds = np.concatenate([[nz[0]], cuts, [len(v)]])
    return np.array([lo + int(np.argmax(np.abs(v[lo:hi]))) for lo, hi in zip(bounds[:-1], bounds[1:])],
                    dtype=np.int64)


def zero_crossings(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Linearly interpolated times where the signal changes sign."""
    v = np.asarray(values, dtype=np.float64)
    i = np.flatnonzero((v[:-1] < 0) & (v[1:] >= 0) | (v[:-1] > 0) & (v[1:] <= 0))
    frac = v[i] / (v[i] - v[i + 1])
    return times[i] + frac * (times[i + 1] - times[i])


def oscillation_period(times: np.ndarray, values: np.ndarray) -> float:
    """Twice the mean spacing between zero crossings; nan with fewer than two crossings."""
    z = zero_crossings(times, values)
    if len(z) < 2:
        return math.nan
    return float(2.0 * np.mean(np.diff(z)))
