from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument
from ..physics import Terrain
from ..rng import SeededRng


@dataclass(frozen=True)
class FlatTerrain:
    length: float = 2000.0

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidArgument(f"terrain length must be positive, got {self.length}")


@dataclass(frozen=True)
class UnevenTerrain:
    """Fixed-pitch polyline with uniformly jittered heights and end walls."""

    length: float = 2000.0
    amplitude: float = 1.0
    segment_length: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidArgument(f"terrain length must be positive, got {self.length}")
        if not self.amplitude >= 0:
            raise InvalidArgument(f"terrain amplitude must be >= 0, got {self.amplitude}")
        if not self.segment_length > 0:
            raise InvalidArgument(f"segment length must be positive, got {self.segment_length}")


TerrainSpec = FlatTerrain | UnevenTerrain


def make_terrain(spec: TerrainSpec, friction: float = 1.0, restitution: float = 0.0) -> Terrain:
    half = spec.length / 2.0
    if isinstance(spec, FlatTerrain):
        return Terrain(np.array([[-half, 0.0], [half, 0.0]]), friction, restitution)
    n = max(1, int(np.ceil(spec.length / spec.segment_length)))
    xs = -half + spec.segment_length * np.arange(n + 1)
    xs[-1] = max(xs[-1], half)
    ys = SeededRng(spec.seed).uniform(-spec.amplitude, spec.amplitude, size=n + 1)
    ys[0] += 3.0 * spec.amplitude
    ys[-1] += 3.0 * spec.amplitude
    return Terrain(np.column_stack([xs, ys]), friction, restitution)
