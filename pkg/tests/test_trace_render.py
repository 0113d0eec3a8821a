import math

import numpy as np
import pytest

from voxelsim.control import TimeFunctionController
from voxelsim.grid import Grid
from voxelsim.render import FrameSpec, area_color, frame_svg, render_frames
from voxelsim.tasks import LocomotionConfig, run_locomotion
from voxelsim.trace import COLUMNS, TraceFormatError, read_trace, trace_text
from voxelsim.voxel import MaterialSpec
from voxelsim.vsr import VSRDescription


@pytest.fixture(scope="module")
def snapshots():
    desc = VSRDescription(Grid(2, 1, MaterialSpec()), TimeFunctionController(Grid(2, 1, "sin(2*pi*t + x)")))
    return run_locomotion(desc, LocomotionConfig(duration=0.5), record=True).snapshots


def test_trace_frame_count_formula():
    # 60 s at one controller call every two steps
    cfg = LocomotionConfig(duration=60.0, control_step_interval=1)
    assert math.floor(cfg.duration / cfg.control_period + 1e-9) + 1 == 1801


def test_round_trip(snapshots):
    text = trace_text(snapshots)
    assert text.splitlines()[0].split(",") == COLUMNS
    assert len(text.splitlines()) == 1 + 2 * len(snapshots)
    back = read_trace(text.encode())
    assert len(back) == len(snapshots) == 16
    for a, b in zip(snapshots, back):
        assert b.time == pytest.approx(a.time, rel=1e-8)
        for ra, rb in zip(a.voxels, b.voxels):
            assert (ra.x, ra.y, ra.touching) == (rb.x, rb.y, rb.touching)
            assert rb.area_ratio == pytest.approx(ra.area_ratio, rel=1e-8)
            assert np.allclose(rb.polygons, ra.polygons, rtol=1e-8, atol=1e-9)
    assert trace_text(back) == text


def test_empty_traces():
    assert read_trace(b"") == []
    assert read_trace((",".join(COLUMNS) + "\n").encode()) == []


def test_corrupt_byte_reports_offset(snapshots):
    text = trace_text(snapshots).encode()
    lines = text.split(b"\n")
    offset = len(lines[0]) + 1 + len(lines[1]) + 1
    bad = text[:offset + 3] + b"Z" + text[offset + 4:]
    with pytest.raises(TraceFormatError) as info:
        read_trace(bad)
    assert info.value.offset == offset
    assert f"byte {offset}" in str(info.value)


def test_bad_header():
    with pytest.raises(TraceFormatError) as info:
        read_trace(b"time,x\n1,2\n")
    assert info.value.offset == 0


def test_area_colors():
    assert area_color(1.0) == "#00ff00"
    assert area_color(0.8) == "#ff0000"
    assert area_color(1.2) == "#ffff00"
    assert area_color(0.5) == "#ff0000"
    # halfway between green and red
    assert area_color(0.9) in ("#7f8000", "#808000")


def test_frame_svg(snapshots):
    svg = frame_svg(snapshots[0], FrameSpec(), np.array([[-100.0, 0.0], [100.0, 0.0]]))
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    # 2 voxel outlines + 8 masses + terrain
    assert svg.count("<polygon") == 11
    assert "t = 0.00 s" in svg


def test_render_frames(tmp_path, snapshots):
    trace = tmp_path / "t.csv"
    trace.write_text(trace_text(snapshots))
    n = render_frames(trace, FrameSpec(draw_masses=False), tmp_path / "frames")
    files = sorted((tmp_path / "frames").glob("*.svg"))
    assert n == len(files) == len(snapshots)
    empty = tmp_path / "e.csv"
    empty.write_text(",".join(COLUMNS) + "\n")
    assert render_frames(empty, FrameSpec(), tmp_path / "none") == 0
