"""SVG frames from a trace: voxels colored by area change, terrain in gray."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .tasks.locomotion import Snapshot
from .trace import read_trace

RED = np.array([1.0, 0.0, 0.0])
GREEN = np.array([0.0, 1.0, 0.0])
YELLOW = np.array([1.0, 1.0, 0.0])
TERRAIN_COLOR = "#404040"


@dataclass
class FrameSpec:
    pixels_per_meter: float = 20.0
    max_area_change: float = 0.2
    view_width: float = 40.0
    view_height: float = 20.0
    draw_masses: bool = True
    draw_terrain: bool = True


def area_color(ratio: float, max_area_change: float = 0.2) -> str:
    """Hex color: red when shrunk by max_area_change, green at rest, yellow when expanded."""
    if max_area_change <= 0:
        u = 0.0
    else:
        u = float(np.clip((ratio - 1.0) / max_area_change, -1.0, 1.0))
    rgb = GREEN + u * (YELLOW - GREEN) if u >= 0 else GREEN + (-u) * (RED - GREEN)
    r, g, b = (int(round(255 * c)) for c in rgb)
    return f"#{r:02x}{g:02x}{b:02x}"


def frame_svg(snap: Snapshot, spec: FrameSpec, terrain: Optional[np.ndarray] = None) -> str:
    s = spec.pixels_per_meter
    w_px, h_px = spec.view_width * s, spec.view_height * s
    x0 = snap.center.x - spec.view_width / 2
    y0 = snap.center.y - spec.view_height / 2

    def pt(x, y):
        return f"{(x - x0) * s:.2f},{h_px - (y - y0) * s:.2f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w_px:.0f}" height="{h_px:.0f}" '
           f'viewBox="0 0 {w_px:.0f} {h_px:.0f}">',
           f'<rect width="100%" height="100%" fill="white"/>',
           f'<text x="5" y="15" font-size="12">t = {snap.time:.2f} s</text>']
    if spec.draw_terrain and terrain is not None and len(terrain):
        pts = [pt(x, y) for x, y in terrain]
        lo = min(float(np.min(terrain[:, 1])), y0) - 1.0
        pts = [pt(terrain[0, 0], lo), *pts, pt(terrain[-1, 0], lo)]
        out.append(f'<polygon points="{" ".join(pts)}" fill="{TERRAIN_COLOR}"/>')
    for rec in snap.voxels:
        # voxel outline through the outer corners of its four masses (mass order 1..4 = TL, TR, BR, BL)
        outline = [rec.polygons[0, 3], rec.polygons[1, 2], rec.polygons[2, 1], rec.polygons[3, 0]]
        color = area_color(rec.area_ratio, spec.max_area_change)
        out.append(f'<polygon points="{" ".join(pt(*p) for p in outline)}" fill="{color}" '
                   f'fill-opacity="0.8" stroke="black" stroke-width="0.5"/>')
        if spec.draw_masses:
            for poly in rec.polygons:
                out.append(f'<polygon points="{" ".join(pt(*p) for p in poly)}" fill="#808080"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_frames(trace_path, spec: FrameSpec, out_dir, terrain: Optional[np.ndarray] = None) -> int:
    """Write one SVG per snapshot in the trace; returns the frame count."""
    snapshots = read_trace(Path(trace_path).read_bytes())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(len(snapshots))))
    for i, snap in enumerate(snapshots):
        (out / f"frame_{i:0{width}d}.svg").write_text(frame_svg(snap, spec, terrain))
    return len(snapshots)
