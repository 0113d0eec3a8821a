import itertools

import pytest
from hypothesis import given, strategies as st

from voxelsim.errors import InvalidArgument
from voxelsim.grid import (
    Grid,
    Vec2,
    connected_components,
    grid_new,
    is_connected,
    largest_connected_region,
)


def test_grid_new_single_empty_cell():
    g = grid_new(1, 1)
    assert len(g) == 1 and g[0, 0] is None and g.count() == 0


def test_grid_new_fill():
    g = grid_new(4, 2, "M")
    assert len(g) == 8
    assert all(v == "M" for _, _, v in g.cells())


@pytest.mark.parametrize("w,h", [(0, 3), (3, 0), (-1, 2)])
def test_grid_new_rejects_zero_dimension(w, h):
    with pytest.raises(InvalidArgument):
        grid_new(w, h, "M")


def test_from_rows_puts_first_row_on_top():
    g = Grid.from_rows([["a", "b"], ["c", None]])
    assert g[0, 1] == "a" and g[1, 1] == "b" and g[0, 0] == "c" and g[1, 0] is None
    assert g.rows() == [["a", "b"], ["c", None]]


def test_cells_row_major_from_bottom():
    g = Grid(2, 2, 0)
    assert [(x, y) for x, y, _ in g.cells()] == [(0, 0), (1, 0), (0, 1), (1, 1)]


def test_out_of_range_index():
    with pytest.raises(IndexError):
        Grid(2, 2)[2, 0]


def test_cropped_and_bounding_box():
    g = Grid(4, 4)
    g[1, 2] = 1
    g[2, 3] = 2
    assert g.bounding_box() == (1, 2, 2, 3)
    c = g.cropped()
    assert (c.width, c.height) == (2, 2)
    assert c[0, 0] == 1 and c[1, 1] == 2


def test_vec2_ops():
    a, b = Vec2(1.0, 2.0), Vec2(3.0, -1.0)
    assert a + b == Vec2(4.0, 1.0)
    assert a - b == Vec2(-2.0, 3.0)
    assert a.dot(b) == 1.0
    assert a.cross(b) == -7.0
    r = Vec2(1.0, 0.0).rotated(1.5707963267948966)
    assert r.x == pytest.approx(0.0, abs=1e-15) and r.y == pytest.approx(1.0)


def _occupancy(rows):
    return Grid.from_rows([[ch == "#" or None for ch in r] for r in rows])


def test_single_cell_region_is_identity():
    g = _occupancy(["..", ".#"])
    out = largest_connected_region(g)
    assert [(x, y) for x, y, v in out.cells() if v] == [(1, 0)]


def test_keeps_larger_component():
    g = _occupancy(["##.#", "#..."])
    out = largest_connected_region(g)
    assert sorted((x, y) for x, y, v in out.cells() if v) == [(0, 0), (0, 1), (1, 1)]


def test_full_grid_kept():
    g = _occupancy(["###", "###"])
    assert sum(bool(v) for _, _, v in largest_connected_region(g).cells()) == 6


def test_empty_grid_gives_empty_region():
    g = Grid(3, 3)
    assert not any(v for _, _, v in largest_connected_region(g).cells())


def test_tie_prefers_lowest_minimal_cell():
    # two singletons: (2,0) has the lower y and wins
    g = _occupancy(["#..", "..#"])
    out = largest_connected_region(g)
    assert [(x, y) for x, y, v in out.cells() if v] == [(2, 0)]


def test_diagonal_cells_are_not_connected():
    assert not is_connected(_occupancy(["#.", ".#"]))


# brute-force oracle: components by repeated union over 4-adjacent pairs
def _oracle_max_component(cells, w, h):
    parent = {c: c for c in cells}

    def find(c):
        while parent[c] != c:
            c = parent[c]
        return c

    for (x, y) in cells:
        for n in ((x + 1, y), (x, y + 1)):
            if n in parent:
                parent[find(n)] = find((x, y))
    sizes = {}
    for c in cells:
        sizes[find(c)] = sizes.get(find(c), 0) + 1
    return max(sizes.values(), default=0)


grids = st.integers(1, 4).flatmap(
    lambda w: st.integers(1, 4).flatmap(
        lambda h: st.lists(st.booleans(), min_size=w * h, max_size=w * h).map(lambda bits: (w, h, bits))))


@given(grids)
def test_region_matches_bruteforce_oracle(args):
    w, h, bits = args
    g = Grid(w, h)
    for i, b in enumerate(bits):
        if b:
            g[i % w, i // w] = True
    out = largest_connected_region(g)
    kept = {(x, y) for x, y, v in out.cells() if v}
    occupied = {(x, y) for x, y, v in g.occupied()}
    assert kept <= occupied
    assert len(kept) == _oracle_max_component(occupied, w, h)
    if kept:
        assert len(connected_components(out)) == 1


def test_exhaustive_3x3_component_count_consistency():
    for bits in itertools.product([False, True], repeat=9):
        g = Grid(3, 3)
        for i, b in enumerate(bits):
            if b:
                g[i % 3, i // 3] = True
        comps = connected_components(g)
        assert sum(len(c) for c in comps) == sum(bits)
