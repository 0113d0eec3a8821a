"""Genotype-to-robot decoders for body, open-loop and sensing controller search."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..control import MLPController, TimeFunctionController, mlp_weight_count
from ..errors import DecodeFailure, InvalidArgument
from ..grid import Grid, largest_connected_region
from ..sensing import Aggregate, SensorKind, SensorSpec
from ..voxel import ALL_GROUPS, MaterialSpec, ScaffoldingGroup
from ..vsr import VSRDescription

SIGMA_FLOOR = 1e-6
N_GAUSSIANS = 5


def _check_dim(genotype, expected: int) -> np.ndarray:
    g = np.asarray(genotype, dtype=np.float64).ravel()
    if len(g) != expected:
        raise InvalidArgument(f"genotype has {len(g)} values, expected {expected}")
    return g


def _fmt(v: float) -> str:
    return repr(float(v))


# --------------------------------------------------------------- body search

PASSIVE_HARD = MaterialSpec(sds_frequency=25.0)
PASSIVE_SOFT = MaterialSpec(sds_frequency=5.0,
                            scaffolding=frozenset({ScaffoldingGroup.SIDE_EXTERNAL, ScaffoldingGroup.CENTRAL_CROSS}))
ACTIVE = MaterialSpec()
COUNTER_ACTIVE = MaterialSpec()

# (material, time function) per mixture component
BODY_MATERIALS = (
    (PASSIVE_HARD, "0"),
    (PASSIVE_SOFT, "0"),
    (ACTIVE, "sin(2*pi*t)"),
    (COUNTER_ACTIVE, "sin(-2*pi*t)"),
)


def mixture_values(genotype: np.ndarray, width: int, height: int, n_materials: int = 4) -> np.ndarray:
    """g(x, y, j) on the grid, shape (n_materials, height, width); cells are
    evaluated at 1-based coordinates."""
    params = genotype.reshape(n_materials, N_GAUSSIANS, 4)
    xs = np.arange(1, width + 1, dtype=np.float64)[None, None, :]
    ys = np.arange(1, height + 1, dtype=np.float64)[None, :, None]
    out = np.zeros((n_materials, height, width))
    for j in range(n_materials):
        for gx, gy, sigma, q in params[j]:
            cx = 1.0 + gx * (width - 1)
            cy = 1.0 + gy * (height - 1)
            s = max(abs(sigma), SIGMA_FLOOR)
            d2 = (xs - cx) ** 2 + (ys - cy) ** 2
            out[j] += (q / (s * math.sqrt(2.0 * math.pi)) * np.exp(-d2 / (s * s)))[0]
    return out


def material_map(genotype, width: int, height: int, threshold: float = 1.0,
                 n_materials: int = 4) -> Grid:
    """Material index per cell (None where empty), restricted to the largest
    4-connected region."""
    g = _check_dim(genotype, n_materials * N_GAUSSIANS * 4)
    values = mixture_values(g, width, height, n_materials)
    best = np.argmax(values, axis=0)
    peak = np.max(values, axis=0)
    grid: Grid = Grid(width, height)
    for y in range(height):
        for x in range(width):
            if peak[y, x] >= threshold:
                grid[x, y] = int(best[y, x])
    keep = largest_connected_region(grid.map(lambda v: True))
    for x, y, v in grid.cells():
        if v is not None and not keep[x, y]:
            grid[x, y] = None
    return grid


@dataclass
class GaussianMixtureBody:
    width: int = 5
    height: int = 5
    threshold: float = 1.0
    materials: tuple = BODY_MATERIALS

    @property
    def dimension(self) -> int:
        return len(self.materials) * N_GAUSSIANS * 4

    init_range = (0.0, 1.0)

    def decode(self, genotype) -> VSRDescription:
        grid = material_map(genotype, self.width, self.height, self.threshold, len(self.materials))
        if grid.count() == 0:
            raise DecodeFailure("no cell reaches the mixture threshold")
        grid = grid.cropped()
        body = grid.map(lambda j: self.materials[j][0])
        funcs = grid.map(lambda j: self.materials[j][1])
        return VSRDescription(body, TimeFunctionController(funcs))


# ----------------------------------------------------------- open-loop gaits

@dataclass
class PhaseController:
    body: Grid = field(default_factory=lambda: Grid(11, 4, MaterialSpec()))

    @property
    def dimension(self) -> int:
        return self.body.count()

    init_range = (-math.pi, math.pi)

    def decode(self, genotype) -> VSRDescription:
        g = _check_dim(genotype, self.dimension)
        funcs: Grid = Grid(self.body.width, self.body.height)
        for (x, y, _), phi in zip(self.body.occupied(), g):
            funcs[x, y] = f"sin(2*pi*t + {_fmt(phi)})"
        return VSRDescription(self.body, TimeFunctionController(funcs))


@dataclass
class EvoDevoController:
    body: Grid = field(default_factory=lambda: Grid(11, 4, MaterialSpec()))
    t_final: float = 60.0

    @property
    def dimension(self) -> int:
        return 3 * self.body.count()

    init_range = (-math.pi, math.pi)

    def decode(self, genotype) -> VSRDescription:
        g = _check_dim(genotype, self.dimension).reshape(-1, 3)
        funcs: Grid = Grid(self.body.width, self.body.height)
        for (x, y, _), (phi, a, b) in zip(self.body.occupied(), g):
            funcs[x, y] = (f"sin(2*pi*t + {_fmt(phi)}) + {_fmt(a)}"
                           f" + t/{_fmt(self.t_final)}*({_fmt(b)} - {_fmt(a)})")
        return VSRDescription(self.body, TimeFunctionController(funcs))


# --------------------------------------------------------- sensing network

def shape_grid(name: str, material: Optional[MaterialSpec] = None) -> Grid:
    m = material or MaterialSpec()
    rows = {
        "worm": ["####"],
        "biped": ["####", "#..#"],
        "tripod": ["#####", "#.#.#"],
    }
    if name not in rows:
        raise InvalidArgument(f"unknown shape {name!r}; choose worm, biped or tripod")
    return Grid.from_rows([[m if ch == "#" else None for ch in row] for row in rows[name]])


SENSING_TEMPLATE = tuple(
    SensorSpec(kind, agg)
    for kind in (SensorKind.AREA_RATIO, SensorKind.ROTATED_X_VELOCITY, SensorKind.ROTATED_Y_VELOCITY)
    for agg in (Aggregate.mean_of_last(5), Aggregate.nth_difference(5))
)


@dataclass
class SensingMLP:
    body: Grid = field(default_factory=lambda: shape_grid("worm"))
    sensors: tuple = SENSING_TEMPLATE
    driving_function: Optional[str] = "sin(2*pi*t)"
    hidden_layers: tuple = ()

    @property
    def n_inputs(self) -> int:
        return self.body.count() * len(self.sensors) + (1 if self.driving_function else 0)

    @property
    def dimension(self) -> int:
        return mlp_weight_count(self.n_inputs, list(self.hidden_layers), self.body.count())

    init_range = (-1.0, 1.0)

    def decode(self, genotype) -> VSRDescription:
        g = _check_dim(genotype, self.dimension)
        sensors = self.body.map(lambda _: list(self.sensors))
        return VSRDescription(self.body, MLPController(sensors, g, list(self.hidden_layers),
                                                       self.driving_function))


def body_dimensions(description: VSRDescription) -> tuple[int, int]:
    box = description.body.bounding_box()
    return box[2] - box[0] + 1, box[3] - box[1] + 1
