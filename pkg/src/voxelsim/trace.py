"""Per-control-step trace CSV: one row per voxel per snapshot."""

from __future__ import annotations

import csv
import io
from typing import Iterable, Iterator

import numpy as np

from .errors import InvalidArgument
from .grid import Vec2
from .tasks.locomotion import Snapshot, VoxelRecord

BASE_COLUMNS = ["time", "voxel_x", "voxel_y", "area_ratio", "control", "touching", "center_x", "center_y"]
POLY_COLUMNS = [f"m{m}_v{v}_{axis}" for m in range(1, 5) for v in range(1, 5) for axis in "xy"]
COLUMNS = BASE_COLUMNS + POLY_COLUMNS


class TraceFormatError(InvalidArgument):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


def fmt(v: float) -> str:
    return f"{v:.9g}"


def write_trace(snapshots: Iterable[Snapshot], stream) -> int:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(COLUMNS)
    rows = 0
    for snap in snapshots:
        for rec in snap.voxels:
            w.writerow([fmt(snap.time), rec.x, rec.y, fmt(rec.area_ratio), fmt(rec.control),
                        int(rec.touching), fmt(snap.center.x), fmt(snap.center.y),
                        *(fmt(v) for v in np.asarray(rec.polygons).ravel())])
            rows += 1
    return rows


def trace_text(snapshots: Iterable[Snapshot]) -> str:
    buf = io.StringIO()
    write_trace(snapshots, buf)
    return buf.getvalue()


def read_trace(data: bytes) -> list[Snapshot]:
    """Parse trace bytes back into snapshots; errors report the byte offset."""
    snapshots: list[Snapshot] = []
    if not data.strip():
        return snapshots
    offset = 0
    lines = data.split(b"\n")
    header = lines[0].decode("utf-8", "replace").strip().split(",")
    if header != COLUMNS:
        raise TraceFormatError("unexpected trace header", 0)
    offset = len(lines[0]) + 1
    current_t = None
    records: list[VoxelRecord] = []
    center = Vec2(0.0, 0.0)
    for raw in lines[1:]:
        line = raw.strip()
        if line:
            try:
                cells = line.decode("ascii").split(",")
                if len(cells) != len(COLUMNS):
                    raise ValueError(f"expected {len(COLUMNS)} columns, found {len(cells)}")
                t = float(cells[0])
                x, y = int(cells[1]), int(cells[2])
                area, control = float(cells[3]), float(cells[4])
                touching = cells[5] == "1"
                if cells[5] not in ("0", "1"):
                    raise ValueError(f"touching flag {cells[5]!r}")
                cx, cy = float(cells[6]), float(cells[7])
                poly = np.array([float(v) for v in cells[8:]]).reshape(4, 4, 2)
            except (ValueError, UnicodeDecodeError) as exc:
                raise TraceFormatError(f"corrupt trace row ({exc})", offset) from None
            if current_t is not None and t != current_t:
                snapshots.append(Snapshot(current_t, tuple(records), center))
                records = []
            current_t = t
            center = Vec2(cx, cy)
            records.append(VoxelRecord(x, y, poly, area, control, touching))
        offset += len(raw) + 1
    if current_t is not None:
        snapshots.append(Snapshot(current_t, tuple(records), center))
    return snapshots
