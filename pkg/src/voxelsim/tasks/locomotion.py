"""Locomotion: drop a robot on a terrain, run its controller, measure it."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import SimulationDiverged
from ..grid import Vec2
from ..physics import Settings, World
from ..vsr import VSR, VSRDescription, assemble_vsr
from .terrain import FlatTerrain, TerrainSpec, make_terrain

log = logging.getLogger(__name__)

DROP_HEIGHT = 0.01


class MeasureKind(enum.Enum):
    TRAVEL_VELOCITY = "travel_velocity"
    AVERAGE_Y_CENTER = "average_y_center"
    AVERAGE_SQUARED_CONTROL_SUM = "average_squared_control_sum"


# value reported for each measure when the simulation diverges
WORST = {
    MeasureKind.TRAVEL_VELOCITY: -math.inf,
    MeasureKind.AVERAGE_Y_CENTER: -math.inf,
    MeasureKind.AVERAGE_SQUARED_CONTROL_SUM: math.inf,
}


@dataclass
class LocomotionConfig:
    duration: float = 60.0
    control_step_interval: int = 1
    settings: Settings = field(default_factory=Settings)
    terrain: TerrainSpec = field(default_factory=FlatTerrain)
    measures: list = field(default_factory=lambda: [MeasureKind.TRAVEL_VELOCITY])

    def __post_init__(self):
        from ..errors import InvalidArgument
        if not self.duration > 0:
            raise InvalidArgument(f"duration must be positive, got {self.duration}")
        if int(self.control_step_interval) < 0:
            raise InvalidArgument("control step interval must be >= 0")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration / self.settings.dt + 1e-9))

    @property
    def control_period(self) -> float:
        return (self.control_step_interval + 1) * self.settings.dt


@dataclass(frozen=True)
class VoxelRecord:
    x: int
    y: int
    polygons: np.ndarray      # (4 masses, 4 vertices, 2)
    area_ratio: float
    control: float
    touching: bool


@dataclass(frozen=True)
class Snapshot:
    time: float
    voxels: tuple
    center: Vec2


@dataclass
class Outcome:
    measures: list
    values: list
    diverged: bool = False
    n_control_steps: int = 0
    snapshots: Optional[list] = None

    def value(self, kind: MeasureKind) -> float:
        return self.values[self.measures.index(kind)]


def mass_polygons(world: World, bodies: np.ndarray) -> np.ndarray:
    """Corner coordinates (len(bodies), 4, 2) of square bodies, CCW from bottom-left."""
    p = world.positions[bodies]
    a = world.angles[bodies]
    h = world.half_sides[bodies]
    local = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
    c, s = np.cos(a)[:, None], np.sin(a)[:, None]
    lx = local[None, :, 0] * h[:, None]
    ly = local[None, :, 1] * h[:, None]
    return np.stack([p[:, 0:1] + c * lx - s * ly, p[:, 1:2] + s * lx + c * ly], axis=-1)


def take_snapshot(vsr: VSR, t: float, readings: np.ndarray) -> Snapshot:
    polys = mass_polygons(vsr.world, vsr.mass_index.ravel()).reshape(vsr.n_voxels, 4, 4, 2)
    records = tuple(
        VoxelRecord(x, y, polys[i], float(readings[i, 0]), float(vsr.last_controls[i]),
                    bool(readings[i, 7] > 0))
        for i, (x, y) in enumerate(vsr.cells)
    )
    return Snapshot(t, records, vsr.center())


def place_on_terrain(vsr: VSR, world: World) -> None:
    """Left edge at x=0, lowest mass DROP_HEIGHT above the highest terrain point under it."""
    x0, x1 = vsr.extent_x()
    vsr.translate(-x0, 0.0)
    ground = world.terrain.max_height(0.0, x1 - x0) if world.terrain is not None else 0.0
    vsr.translate(0.0, ground + DROP_HEIGHT - vsr.lowest_point())


def build_locomotion(description: VSRDescription, config: LocomotionConfig) -> tuple[World, VSR]:
    world = World(config.settings, make_terrain(config.terrain))
    vsr = assemble_vsr(description, (0.0, 0.0), world, config.control_period)
    place_on_terrain(vsr, world)
    return world, vsr


def run_locomotion(description: VSRDescription, config: LocomotionConfig,
                   record: bool = False, built: Optional[tuple[World, VSR]] = None,
                   timer: Optional[list] = None) -> Outcome:
    world, vsr = built if built is not None else build_locomotion(description, config)
    dt = config.settings.dt
    n_steps = config.n_steps
    every = config.control_step_interval + 1
    x_start = vsr.center().x
    y_sum = 0.0
    f2_sum = 0.0
    calls = 0
    snapshots = [] if record else None
    if timer is not None:
        import time
        t0 = time.perf_counter()
    try:
        i = 0
        while True:
            t = i * dt
            f = vsr.control_step(t)
            calls += 1
            y_sum += vsr.center().y
            f2_sum += float(np.dot(f, f))
            if record:
                snapshots.append(take_snapshot(vsr, t, vsr.sensors()))
            if i >= n_steps:
                break
            k = min(every, n_steps - i)
            world.step(k)
            i += k
            if k < every:
                # trailing partial interval: no controller call at a non-control step
                break
    except SimulationDiverged as exc:
        log.warning("locomotion diverged: %s", exc)
        return Outcome(list(config.measures), [WORST[m] for m in config.measures], True, calls, snapshots)
    if timer is not None:
        timer.append(time.perf_counter() - t0)
    travel = (vsr.center().x - x_start) / config.duration
    values = []
    for m in config.measures:
        if m is MeasureKind.TRAVEL_VELOCITY:
            values.append(travel)
        elif m is MeasureKind.AVERAGE_Y_CENTER:
            values.append(y_sum / calls)
        else:
            values.append(f2_sum / calls)
    return Outcome(list(config.measures), values, False, calls, snapshots)
