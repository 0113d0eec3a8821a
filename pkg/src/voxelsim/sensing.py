"""Voxel sensors and their temporal aggregation over control steps."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


class SensorKind(enum.Enum):
    AREA_RATIO = "area_ratio"
    VELOCITY_MAGNITUDE = "velocity_magnitude"
    ANGLE = "angle"
    X_VELOCITY = "x_velocity"
    Y_VELOCITY = "y_velocity"
    ROTATED_X_VELOCITY = "rotated_x_velocity"
    ROTATED_Y_VELOCITY = "rotated_y_velocity"
    TOUCHING = "touching"


KINDS = tuple(SensorKind)
KIND_INDEX = {k: i for i, k in enumerate(KINDS)}


@dataclass(frozen=True)
class Aggregate:
    """How past readings of one sensor are combined: ``current``,
    ``mean`` of the last n, or the n-th ``diff``erence."""

    mode: str = "current"
    n: int = 1

    def __post_init__(self):
        if self.mode not in ("current", "mean", "diff"):
            raise InvalidArgument(f"unknown aggregate mode {self.mode!r}")
        if int(self.n) < 1:
            raise InvalidArgument(f"aggregate window must be >= 1, got {self.n}")
        if self.mode == "current" and self.n != 1:
            raise InvalidArgument("current aggregate takes no window")

    @classmethod
    def current(cls) -> "Aggregate":
        return cls("current", 1)

    @classmethod
    def mean_of_last(cls, n: int) -> "Aggregate":
        return cls("mean", int(n))

    @classmethod
    def nth_difference(cls, n: int) -> "Aggregate":
        return cls("diff", int(n))

    def __str__(self) -> str:
        return "current" if self.mode == "current" else f"{self.mode}{self.n}"

    @classmethod
    def parse(cls, text: str) -> "Aggregate":
        m = re.fullmatch(r"\s*(current|mean|diff)\s*(\d*)\s*", text)
        if not m:
            raise InvalidArgument(f"cannot parse aggregate {text!r}")
        mode, n = m.group(1), m.group(2)
        return cls(mode, int(n) if n else 1)


@dataclass(frozen=True)
class SensorSpec:
    kind: SensorKind
    aggregate: Aggregate = Aggregate()

    def __str__(self) -> str:
        return f"{self.kind.value}:{self.aggregate}"

    @classmethod
    def parse(cls, text: str) -> "SensorSpec":
        kind, _, agg = text.partition(":")
        try:
            k = SensorKind(kind.strip())
        except ValueError:
            raise InvalidArgument(f"unknown sensor kind {kind!r}") from None
        return cls(k, Aggregate.parse(agg) if agg else Aggregate())


def sensor_values(positions: np.ndarray, velocities: np.ndarray, touching: np.ndarray,
                  rest_quad_area: np.ndarray, prev_angle: np.ndarray) -> np.ndarray:
    """All sensor kinds for a batch of voxels.

    ``positions``/``velocities`` are (n, 4, 2) mass centers/velocities in mass
    order 1..4, ``touching`` is (n, 4).  Returns (n, len(KINDS)) and updates
    ``prev_angle`` in place (kept where the direction is degenerate).
    """
    x, y = positions[..., 0], positions[..., 1]
    # masses are clockwise, so negate the shoelace sum
    signed = -0.5 * (np.sum(x * np.roll(y, -1, axis=1), axis=1) - np.sum(y * np.roll(x, -1, axis=1), axis=1))
    area = np.abs(signed) / rest_quad_area

    u12 = positions[:, 1] - positions[:, 0]
    u43 = positions[:, 2] - positions[:, 3]
    n12 = np.hypot(u12[:, 0], u12[:, 1])[:, None]
    n43 = np.hypot(u43[:, 0], u43[:, 1])[:, None]
    s = np.where(n12 > 0, u12 / np.where(n12 > 0, n12, 1.0), 0.0)
    s = s + np.where(n43 > 0, u43 / np.where(n43 > 0, n43, 1.0), 0.0)
    ok = (s[:, 0] != 0.0) | (s[:, 1] != 0.0)
    angle = np.where(ok, np.arctan2(s[:, 1], s[:, 0]), prev_angle)
    prev_angle[:] = angle

    v = velocities.mean(axis=1)
    ca, sa = np.cos(angle), np.sin(angle)
    out = np.empty((len(positions), len(KINDS)))
    out[:, 0] = area
    out[:, 1] = np.hypot(v[:, 0], v[:, 1])
    out[:, 2] = angle
    out[:, 3] = v[:, 0]
    out[:, 4] = v[:, 1]
    out[:, 5] = v[:, 0] * ca + v[:, 1] * sa
    out[:, 6] = v[:, 0] * sa - v[:, 1] * ca
    out[:, 7] = np.any(touching, axis=1).astype(np.float64)
    return out


def rotated_velocity(v, alpha: float) -> tuple[float, float]:
    return (v[0] * math.cos(alpha) + v[1] * math.sin(alpha),
            v[0] * math.sin(alpha) - v[1] * math.cos(alpha))


class SensorHistory:
    """Ring buffer of readings taken once per control step.

    Until ``n`` readings exist, lookups further back than the oldest
    reading return the oldest one.
    """

    def __init__(self, n_voxels: int, capacity: int, control_period: float):
        if capacity < 1:
            raise InvalidArgument("history capacity must be >= 1")
        self.capacity = int(capacity)
        self.control_period = control_period
        self._buf = np.zeros((self.capacity, n_voxels, len(KINDS)))
        self._times = np.zeros(self.capacity)
        self._next = 0
        self.count = 0

    def push(self, t: float, values: np.ndarray) -> None:
        self._buf[self._next] = values
        self._times[self._next] = t
        self._next = (self._next + 1) % self.capacity
        self.count += 1

    def back(self, k: int) -> np.ndarray:
        """Readings ``k`` control steps before the newest (all voxels, all kinds)."""
        if self.count == 0:
            raise InvalidArgument("history is empty")
        k = min(k, self.count - 1, self.capacity - 1)
        return self._buf[(self._next - 1 - k) % self.capacity]

    def time_back(self, k: int) -> float:
        k = min(k, self.count - 1, self.capacity - 1)
        return float(self._times[(self._next - 1 - k) % self.capacity])

    def aggregate(self, agg: Aggregate) -> np.ndarray:
        """Aggregated (n_voxels, n_kinds) values at the newest reading."""
        if agg.mode == "current" or agg.n == 1 and agg.mode == "mean":
            return self.back(0)
        if agg.mode == "mean":
            return sum(self.back(k) for k in range(agg.n)) / agg.n
        return self.back(0) - self.back(agg.n - 1)


def aggregate_value(readings, agg: Aggregate) -> float:
    """Aggregate a plain sequence of readings ordered oldest to newest."""
    if len(readings) == 0:
        raise InvalidArgument("no readings")
    seq = list(readings)

    def back(k):
        return seq[-1 - min(k, len(seq) - 1)]

    if agg.mode == "current":
        return back(0)
    if agg.mode == "mean":
        return sum(back(k) for k in range(agg.n)) / agg.n
    return back(0) - back(agg.n - 1)
