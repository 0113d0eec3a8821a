"""2-D grid container, planar vectors and connectivity helpers.

Grid coordinates follow the physics frame: ``x`` grows to the right and
``y`` grows upward, so ``y == 0`` is the bottom row.  Cells are stored
row-major (``index = y * width + x``), which is also the canonical voxel
ordering used by controllers and genotype decoders.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Callable, Generic, Iterator, NamedTuple, Optional, TypeVar

from .errors import InvalidArgument

V = TypeVar("V")
W = TypeVar("W")


class Vec2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Vec2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Vec2(self.x - other[0], self.y - other[1])

    def __mul__(self, k):  # type: ignore[override]
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __neg__(self):
        return Vec2(-self.x, -self.y)

    def dot(self, other) -> float:
        return self.x * other[0] + self.y * other[1]

    def cross(self, other) -> float:
        return self.x * other[1] - self.y * other[0]

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def rotated(self, angle: float) -> "Vec2":
        c, s = math.cos(angle), math.sin(angle)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)


class Grid(Generic[V]):
    """Fixed-size 2-D grid whose cells may be empty (``None``)."""

    __slots__ = ("width", "height", "_cells")

    def __init__(self, width: int, height: int, fill: Optional[V] = None):
        if int(width) < 1 or int(height) < 1:
            raise InvalidArgument(f"grid dimensions must be positive, got {width}x{height}")
        self.width = int(width)
        self.height = int(height)
        self._cells: list[Optional[V]] = [fill] * (self.width * self.height)

    @classmethod
    def from_rows(cls, rows: list[list[Optional[V]]]) -> "Grid[V]":
        """Build from rows listed top to bottom, as they would be printed."""
        if not rows or not rows[0]:
            raise InvalidArgument("grid needs at least one row and one column")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise InvalidArgument("ragged rows")
        grid: Grid[V] = cls(width, len(rows))
        for row_index, row in enumerate(rows):
            y = len(rows) - 1 - row_index
            for x, value in enumerate(row):
                grid[x, y] = value
        return grid

    def _index(self, x: int, y: int) -> int:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise IndexError(f"cell ({x}, {y}) outside {self.width}x{self.height} grid")
        return y * self.width + x

    def __getitem__(self, key: tuple[int, int]) -> Optional[V]:
        return self._cells[self._index(*key)]

    def __setitem__(self, key: tuple[int, int], value: Optional[V]) -> None:
        self._cells[self._index(*key)] = value

    def __len__(self) -> int:
        return len(self._cells)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Grid)
            and self.width == other.width
            and self.height == other.height
            and self._cells == other._cells
        )

    def __repr__(self) -> str:
        return f"Grid({self.width}x{self.height}, occupied={self.count()})"

    def cells(self) -> Iterator[tuple[int, int, Optional[V]]]:
        """Yield ``(x, y, value)`` for every cell in row-major order."""
        for i, value in enumerate(self._cells):
            yield i % self.width, i // self.width, value

    def occupied(self) -> Iterator[tuple[int, int, V]]:
        for x, y, value in self.cells():
            if value is not None:
                yield x, y, value

    def values(self) -> list[Optional[V]]:
        return list(self._cells)

    def count(self) -> int:
        return sum(v is not None for v in self._cells)

    def map(self, fn: Callable[[V], W]) -> "Grid[W]":
        out: Grid[W] = Grid(self.width, self.height)
        for x, y, value in self.occupied():
            out[x, y] = fn(value)
        return out

    def rows(self) -> list[list[Optional[V]]]:
        """Rows from top to bottom."""
        return [
            [self[x, y] for x in range(self.width)]
            for y in range(self.height - 1, -1, -1)
        ]

    def bounding_box(self) -> Optional[tuple[int, int, int, int]]:
        """``(min_x, min_y, max_x, max_y)`` of occupied cells, or None."""
        coords = [(x, y) for x, y, _ in self.occupied()]
        if not coords:
            return None
        xs, ys = zip(*coords)
        return min(xs), min(ys), max(xs), max(ys)

    def cropped(self) -> "Grid[V]":
        """Smallest grid holding every occupied cell."""
        box = self.bounding_box()
        if box is None:
            return Grid(1, 1)
        x0, y0, x1, y1 = box
        out: Grid[V] = Grid(x1 - x0 + 1, y1 - y0 + 1)
        for x, y, value in self.occupied():
            out[x - x0, y - y0] = value
        return out


def grid_new(width: int, height: int, fill: Optional[V] = None) -> Grid[V]:
    return Grid(width, height, fill)


_NEIGHBORS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def connected_components(occupancy: Grid) -> list[list[tuple[int, int]]]:
    """4-connected components of truthy cells, each sorted by (y, x).

    Components are returned in the order their minimal cell appears in a
    row-major scan.
    """
    seen: set[tuple[int, int]] = set()
    components = []
    for x, y, value in occupancy.cells():
        if not value or (x, y) in seen:
            continue
        queue = deque([(x, y)])
        seen.add((x, y))
        component = []
        while queue:
            cx, cy = queue.popleft()
            component.append((cx, cy))
            for dx, dy in _NEIGHBORS:
                nx, ny = cx + dx, cy + dy
                if (
                    0 <= nx < occupancy.width
                    and 0 <= ny < occupancy.height
                    and (nx, ny) not in seen
                    and occupancy[nx, ny]
                ):
                    seen.add((nx, ny))
                    queue.append((nx, ny))
        component.sort(key=lambda c: (c[1], c[0]))
        components.append(component)
    return components


def largest_connected_region(occupancy: Grid) -> Grid[bool]:
    """Keep only the largest 4-connected component.

    Equal-size components are resolved in favour of the one whose minimal
    cell comes first by (y, x).  An empty input yields an empty grid.
    """
    out: Grid[bool] = Grid(occupancy.width, occupancy.height, False)
    components = connected_components(occupancy)
    if not components:
        return out
    # components already come in (y, x) order of their minimal cell
    best = max(components, key=len)
    for x, y in best:
        out[x, y] = True
    return out


def is_connected(grid: Grid) -> bool:
    return len(connected_components(grid.map(lambda v: True))) == 1
