"""Voxel-based soft robots: grids of voxels welded along shared sides."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .control import ControllerRuntime, ControllerSpec, validate_controller
from .errors import InvalidArgument, InvalidDescription
from .grid import Grid, Vec2, is_connected
from .physics import World
from .sensing import KINDS, sensor_values
from .voxel import ActuationMode, MaterialSpec, Voxel, build_voxel, clamp_control

log = logging.getLogger(__name__)


@dataclass
class VSRDescription:
    body: Grid                 # MaterialSpec per occupied cell
    controller: ControllerSpec

    def validate(self) -> "VSRDescription":
        if self.body.count() == 0:
            raise InvalidDescription("body has no voxels")
        if not is_connected(self.body):
            raise InvalidDescription("body voxels are not 4-connected")
        lengths = {spec.side_length for _, _, spec in self.body.occupied()}
        if len(lengths) > 1:
            raise InvalidDescription(f"mixed voxel side lengths {sorted(lengths)}")
        for x, y, spec in self.body.occupied():
            try:
                spec.validate()
            except InvalidArgument as exc:
                raise InvalidDescription(f"voxel ({x}, {y}): {exc}") from None
        try:
            validate_controller(self.controller, self.body)
        except InvalidArgument as exc:
            raise InvalidDescription(str(exc)) from None
        return self

    @property
    def n_voxels(self) -> int:
        return self.body.count()

    @property
    def side_length(self) -> float:
        return next(spec for _, _, spec in self.body.occupied()).side_length


# facing masses (0-based): right side 2,3 meets left side 1,4; top 1,2 meets bottom 4,3
_RIGHT_LEFT = ((1, 0), (2, 3))
_TOP_BOTTOM = ((0, 3), (1, 2))


class VSR:
    """An assembled robot living in one world."""

    def __init__(self, description: VSRDescription, world: World, voxels: Grid,
                 cells: list[tuple[int, int]], welds: list[int], group: int, control_period: float):
        self.description = description
        self.world = world
        self.voxels = voxels
        self.cells = cells
        self.voxel_list: list[Voxel] = [voxels[x, y] for x, y in cells]
        self.welds = welds
        self.group = group
        self.mass_index = np.array([v.masses for v in self.voxel_list], dtype=np.int64)
        self.rest_quad_area = np.array([v.rest_mass_quad_area for v in self.voxel_list])
        self._prev_angle = np.zeros(len(cells))
        self.runtime = ControllerRuntime(description.controller, cells, control_period)
        self.last_controls = np.zeros(len(cells))

        area = [i for i, v in enumerate(self.voxel_list) if v.spec.actuation_mode is ActuationMode.AREA]
        self._area_voxels = np.array(area, dtype=np.int64)
        self._force_voxels = [i for i, v in enumerate(self.voxel_list)
                              if v.spec.actuation_mode is ActuationMode.FORCE]
        springs, rests, owner = [], [], []
        for i in area:
            v = self.voxel_list[i]
            springs.append(v.springs)
            rests.append(v.rest_lengths)
            owner.append(np.full(len(v.springs), i, dtype=np.int64))
        self._area_springs = np.concatenate(springs) if springs else np.zeros(0, dtype=np.int64)
        self._area_rests = np.concatenate(rests) if rests else np.zeros(0)
        self._area_owner = np.concatenate(owner) if owner else np.zeros(0, dtype=np.int64)
        self._rho = np.array([v.spec.max_area_change for v in self.voxel_list])
        self._fmax = np.array([v.spec.max_force for v in self.voxel_list])

    @property
    def n_voxels(self) -> int:
        return len(self.voxel_list)

    # -------------------------------------------------------------- geometry

    def mass_positions(self) -> np.ndarray:
        return self.world.positions[self.mass_index]

    def mass_velocities(self) -> np.ndarray:
        return self.world.velocities[self.mass_index]

    def voxel_centers(self) -> np.ndarray:
        return self.mass_positions().mean(axis=1)

    def center(self) -> Vec2:
        c = self.voxel_centers().mean(axis=0)
        return Vec2(float(c[0]), float(c[1]))

    def lowest_point(self) -> float:
        idx = self.mass_index.ravel()
        return float(np.min(self.world.positions[idx, 1] - self.world.half_sides[idx]))

    def extent_x(self) -> tuple[float, float]:
        idx = self.mass_index.ravel()
        p = self.world.positions[idx, 0]
        h = self.world.half_sides[idx]
        return float(np.min(p - h)), float(np.max(p + h))

    def translate(self, dx: float, dy: float) -> None:
        idx = self.mass_index.ravel()
        self.world._bs[idx, 0] += dx
        self.world._bs[idx, 1] += dy

    # --------------------------------------------------------------- sensing

    def sensors(self) -> np.ndarray:
        """(n_voxels, 8) readings of every sensor kind, in cell order."""
        touching = self.world._touching[self.mass_index] != 0
        return sensor_values(self.mass_positions(), self.mass_velocities(), touching,
                             self.rest_quad_area, self._prev_angle)

    # --------------------------------------------------------------- control

    def apply_controls(self, f: np.ndarray) -> None:
        f = np.asarray(f, dtype=np.float64)
        if np.any(~np.isfinite(f)) or np.any(np.abs(f) > 1.0):
            f = np.array([clamp_control(float(v)) for v in f])
        self.last_controls = f
        for v, fv in zip(self.voxel_list, f):
            v.last_control = float(fv)
        if len(self._area_springs):
            scale = np.sqrt(1.0 - f * self._rho)
            self.world.set_rest_lengths(self._area_springs, self._area_rests * scale[self._area_owner])
        if self._force_voxels:
            self._apply_force_mode(f)

    def _apply_force_mode(self, f: np.ndarray) -> None:
        pos = self.mass_positions()
        for i in self._force_voxels:
            if f[i] == 0.0:
                continue
            center = pos[i].mean(axis=0)
            d = center - pos[i]
            n = np.hypot(d[:, 0], d[:, 1])
            n[n < 1e-12] = np.inf
            forces = d / n[:, None] * (f[i] * self._fmax[i])
            self.world.apply_forces(self.mass_index[i], forces)

    def control_step(self, t: float) -> np.ndarray:
        """Run the controller at time ``t`` and actuate every voxel."""
        readings = self.sensors() if self.runtime.needs_sensors else None
        f = self.runtime.control(t, readings)
        self.apply_controls(f)
        return f


def assemble_vsr(description: VSRDescription, origin, world: World,
                 control_period: Optional[float] = None) -> VSR:
    """Build every voxel on the lattice (cell (x, y) centered at origin + (x l, y l))
    and weld adjacent voxels at the midpoints of their facing mass centers."""
    description.validate()
    l = description.side_length
    group = world.new_group()
    voxels: Grid = Grid(description.body.width, description.body.height)
    cells = []
    for x, y, spec in description.body.occupied():
        voxels[x, y] = build_voxel(spec, (origin[0] + x * l, origin[1] + y * l), world, group)
        cells.append((x, y))
    welds = []

    def weld(a: int, b: int):
        pa, pb = world.positions[a], world.positions[b]
        welds.append(world.add_weld(a, b, ((pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0)))

    for x, y in cells:
        v = voxels[x, y]
        if x + 1 < voxels.width and voxels[x + 1, y] is not None:
            right = voxels[x + 1, y]
            for ma, mb in _RIGHT_LEFT:
                weld(v.masses[ma], right.masses[mb])
        if y + 1 < voxels.height and voxels[x, y + 1] is not None:
            up = voxels[x, y + 1]
            for ma, mb in _TOP_BOTTOM:
                weld(v.masses[ma], up.masses[mb])
    if control_period is None:
        control_period = world.settings.dt
    return VSR(description, world, voxels, cells, welds, group, control_period)


def uniform_body(width: int, height: int, material: Optional[MaterialSpec] = None) -> Grid:
    return Grid(width, height, material or MaterialSpec())
