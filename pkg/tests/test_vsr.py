import numpy as np
import pytest

from voxelsim.control import TimeFunctionController
from voxelsim.errors import InvalidDescription
from voxelsim.grid import Grid
from voxelsim.physics import Settings, World
from voxelsim.voxel import ActuationMode, MaterialSpec
from voxelsim.vsr import VSRDescription, assemble_vsr, uniform_body


def describe(rows, material=None, fn="0"):
    m = material or MaterialSpec()
    body = Grid.from_rows([[m if ch == "#" else None for ch in r] for r in rows])
    return VSRDescription(body, TimeFunctionController(body.map(lambda _: fn)))


def build(desc, gravity=(0.0, 0.0)):
    w = World(Settings(gravity=gravity))
    return w, assemble_vsr(desc, (0.0, 0.0), w)


def test_single_voxel_has_no_welds():
    w, vsr = build(describe(["#"]))
    assert vsr.welds == [] and w.n_welds == 0


def test_full_4x2_has_20_welds():
    w, vsr = build(describe(["####", "####"]))
    assert len(vsr.welds) == 2 * (3 * 2) + 2 * (4 * 1) == 20


def test_biped_layout_has_10_welds():
    _, vsr = build(describe(["####", "#..#"]))
    assert vsr.n_voxels == 6 and len(vsr.welds) == 10


@pytest.mark.parametrize("w,h", [(1, 3), (2, 2), (3, 1), (5, 4)])
def test_weld_count_formula(w, h):
    _, vsr = build(describe(["#" * w] * h))
    assert len(vsr.welds) == 2 * (h * (w - 1) + w * (h - 1))


def test_welds_join_facing_masses_at_midpoints():
    w, vsr = build(describe(["##"]))
    left, right = vsr.voxel_list
    j = w.weld(vsr.welds[0])
    pa = w.positions[j.body_a]
    pb = w.positions[j.body_b]
    assert j.world_anchor == pytest.approx(tuple((pa + pb) / 2))
    assert {j.body_a, j.body_b} == {left.masses[1], right.masses[0]}


def test_lattice_placement_and_shared_group():
    w, vsr = build(describe(["##", "#."]))
    centers = vsr.voxel_centers()
    assert np.allclose(centers, [[0.0, 0.0], [0.0, 3.0], [3.0, 3.0]])
    groups = {w.group_of(int(m)) for m in vsr.mass_index.ravel()}
    assert len(groups) == 1


def test_disconnected_body_rejected():
    with pytest.raises(InvalidDescription):
        build(describe(["#.#"]))


def test_empty_body_rejected():
    body = Grid(2, 2)
    with pytest.raises(InvalidDescription):
        VSRDescription(body, TimeFunctionController(Grid(2, 2))).validate()


def test_mixed_side_lengths_rejected():
    body = Grid.from_rows([[MaterialSpec(), MaterialSpec(side_length=2.0)]])
    with pytest.raises(InvalidDescription):
        VSRDescription(body, TimeFunctionController(body.map(lambda _: "0"))).validate()


def test_missing_function_rejected():
    body = uniform_body(2, 1)
    funcs = Grid(2, 1)
    funcs[0, 0] = "0"
    with pytest.raises(InvalidDescription):
        VSRDescription(body, TimeFunctionController(funcs)).validate()


def test_welded_body_stays_rigid_at_rest():
    w, vsr = build(describe(["###", "###"]))
    before = vsr.voxel_centers().copy()
    w.step(120)
    assert np.allclose(vsr.voxel_centers(), before, atol=1e-6)


def test_control_step_applies_time_functions():
    w, vsr = build(describe(["##"], fn="sin(2*pi*t)"))
    f = vsr.control_step(0.25)
    assert f.tolist() == pytest.approx([1.0, 1.0])
    assert vsr.last_controls.tolist() == pytest.approx([1.0, 1.0])


def test_mixed_actuation_modes():
    hard = MaterialSpec(actuation_mode=ActuationMode.FORCE)
    body = Grid.from_rows([[MaterialSpec(), hard]])
    desc = VSRDescription(body, TimeFunctionController(body.map(lambda _: "1")))
    w, vsr = build(desc)
    vsr.control_step(0.0)
    area_voxel = vsr.voxel_list[0]
    assert w.spring_rest_lengths[area_voxel.springs] == pytest.approx(area_voxel.rest_lengths * np.sqrt(0.8))
    w.step()
    # the force-mode voxel shrinks toward its center
    c = vsr.voxel_centers()[1]
    m = vsr.voxel_list[1].masses[1]
    assert np.dot(c - w.positions[m], w.velocities[m]) > 0
