import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from voxelsim.control import Expression, MLPController, mlp_weight_count
from voxelsim.errors import DecodeFailure, InvalidArgument
from voxelsim.evolution import (
    EvoDevoController,
    GaussianMixtureBody,
    PhaseController,
    SensingMLP,
    material_map,
    mixture_values,
    shape_grid,
)
from voxelsim.evolution.ea import (
    EAConfig,
    evolve,
    extended_segment_crossover,
    gaussian_mutation,
    sphere,
    tournament_select,
)
from voxelsim.grid import Grid
from voxelsim.rng import SeededRng
from voxelsim.voxel import MaterialSpec

SQRT_2PI = math.sqrt(2 * math.pi)


def test_mutation_empirical_std():
    rng = SeededRng(1)
    samples = np.array([gaussian_mutation(np.zeros(3), 0.15, rng) for _ in range(100_000)])
    assert np.all(np.abs(samples.std(axis=0) - 0.15) < 0.005)
    assert np.all(np.abs(samples.mean(axis=0)) < 0.005)


def test_mutation_preserves_dimension_and_rejects_bad_sigma():
    assert gaussian_mutation(np.ones(7), 1e-12, SeededRng(0)) == pytest.approx(np.ones(7))
    with pytest.raises(InvalidArgument):
        gaussian_mutation(np.ones(2), 0.0, SeededRng(0))


def test_crossover_endpoints_and_mismatch():
    x = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(extended_segment_crossover(x, x.copy(), SeededRng(0)), x)
    with pytest.raises(InvalidArgument):
        extended_segment_crossover(x, np.zeros(2), SeededRng(0))


@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=1, max_size=20),
       st.integers(0, 2 ** 32 - 1))
def test_crossover_child_in_extended_hull(pairs, seed):
    x1 = np.array([a for a, _ in pairs])
    x2 = np.array([b for _, b in pairs])
    child = extended_segment_crossover(x1, x2, SeededRng(seed))
    lo, hi = np.minimum(x1, x2), np.maximum(x1, x2)
    span = hi - lo
    assert np.all(child >= lo - span - 1e-9) and np.all(child <= hi + span + 1e-9)


def test_tournament_full_size_finds_best_often():
    rng = SeededRng(5)
    fit = list(np.arange(10.0)[::-1])     # best is index 9
    hits = sum(tournament_select(fit, 10, rng) == 9 for _ in range(20_000)) / 20_000
    bound = 1 - (1 - 1 / 10) ** 10
    assert hits >= bound - 0.015
    assert hits == pytest.approx(bound, abs=0.015)


def test_tournament_edge_cases():
    assert tournament_select([3.0], 4, SeededRng(0)) == 0
    rng = SeededRng(2)
    # equal fitness: the lowest sampled index wins, so index 0 wins whenever sampled
    picks = [tournament_select([1.0] * 4, 4, rng) for _ in range(2000)]
    assert np.mean(np.array(picks) == 0) == pytest.approx(1 - 0.75 ** 4, abs=0.04)
    with pytest.raises(InvalidArgument):
        tournament_select([], 2, rng)


def test_ea_config_validation():
    EAConfig().validate()
    for bad in (dict(n_pop=0), dict(n_tour=300), dict(p_crossover=0.7), dict(mutation_sigma=0.0),
                dict(n_gen=-1)):
        with pytest.raises(InvalidArgument):
            EAConfig(**bad).validate()


def small(**kw):
    base = dict(n_pop=20, n_tour=4, n_gen=50, seed=11)
    base.update(kw)
    return EAConfig(**base)


def test_zero_generations_records_initial_population():
    h = evolve(small(n_gen=0), 5, sphere)
    assert len(h.records) == 1 and h.records[0].iteration == 0


def test_sphere_improves_and_best_is_monotone():
    h = evolve(small(init_low=-5.0, init_high=5.0), 10, sphere)
    best = h.best_fitness
    assert len(best) == 51
    assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
    assert best[-1] < 0.1 * best[0]
    assert h.best.fitness == best[-1] == sphere(h.best.genotype)


def test_evolve_is_reproducible():
    a = evolve(small(n_gen=10), 4, sphere)
    b = evolve(small(n_gen=10), 4, sphere)
    assert a.records == b.records
    assert np.array_equal(a.best.genotype, b.best.genotype)


def test_failing_fitness_is_worst_and_evolution_continues():
    def flaky(x):
        if x[0] > 0.5:
            raise RuntimeError("boom")
        return float(np.sum(x))

    h = evolve(small(n_gen=5), 3, flaky)
    assert math.isfinite(h.best.fitness) and h.best.genotype[0] <= 0.5


def test_duplicate_children_are_avoided():
    # with n_pop=1 and mutation only, every child is unique unless sigma underflows
    h = evolve(EAConfig(n_pop=1, n_tour=1, n_gen=20, p_crossover=0.0, p_mutation=1.0), 3, sphere)
    assert len(h.records) == 21


def test_initial_population_uses_init_range():
    seen = []
    evolve(small(n_gen=0, n_pop=50), 3, lambda x: seen.append(x) or 0.0, init_range=(-math.pi, math.pi))
    arr = np.array(seen)
    assert arr.min() >= -math.pi and arr.max() <= math.pi and arr.min() < -2.5


# ----- decoders


def one_bump(width, height, x, y, material=0):
    """Genotype with a single unit-height gaussian centered on cell (x, y), 1-based."""
    g = np.zeros((4, 5, 4))
    g[material, 0] = [(x - 1) / (width - 1), (y - 1) / (height - 1), 1.0, SQRT_2PI]
    return g.ravel()


def test_mixture_boundary_value_occupies_cell():
    g = one_bump(5, 5, 3, 3)
    values = mixture_values(g, 5, 5)
    assert values[0, 2, 2] == 1.0
    m = material_map(g, 5, 5)
    assert m.count() == 1 and m[2, 2] == 0


def test_mixture_value_matches_direct_formula():
    rng = np.random.default_rng(4)
    g = rng.uniform(0, 1, size=80)
    values = mixture_values(g, 5, 4)
    p = g.reshape(4, 5, 4)
    x, y, j = 4, 2, 1     # 1-based cell
    direct = 0.0
    for gx, gy, s, q in p[j]:
        cx, cy = 1 + gx * 4, 1 + gy * 3
        d2 = (x - cx) ** 2 + (y - cy) ** 2
        direct += q / (max(abs(s), 1e-6) * SQRT_2PI) * math.exp(-d2 / max(abs(s), 1e-6) ** 2)
    assert values[j, y - 1, x - 1] == pytest.approx(direct, rel=1e-12)


def test_zero_mixture_is_decode_failure():
    with pytest.raises(DecodeFailure):
        GaussianMixtureBody().decode(np.zeros(80))


def flood_largest(mask):
    h, w = mask.shape
    seen = np.zeros_like(mask)
    best = 0
    for sy in range(h):
        for sx in range(w):
            if mask[sy, sx] and not seen[sy, sx]:
                q, n = deque([(sx, sy)]), 0
                seen[sy, sx] = True
                while q:
                    x, y = q.popleft()
                    n += 1
                    for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                        if 0 <= nx < w and 0 <= ny < h and mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            q.append((nx, ny))
                best = max(best, n)
    return best


def test_two_blobs_keep_the_larger():
    # blob of 5 cells in column 1 and a blob of 2 cells in column 5, using one bump per cell
    cells = [(1, y) for y in range(1, 6)] + [(5, 1), (5, 2)]
    g = np.zeros((4, 5, 4))
    # narrow gaussians (sigma 0.3) so each bump only lights its own cell; five per material
    for k, (x, y) in enumerate(cells):
        j, i = divmod(k, 5)
        g[j, i] = [(x - 1) / 4, (y - 1) / 4, 0.3, 2 * 0.3 * SQRT_2PI]
    m = material_map(g.ravel(), 5, 5)
    mask = np.array([[m[x, y] is not None for x in range(5)] for y in range(5)])
    assert m.count() == 5 == flood_largest(
        np.array([[(x + 1, y + 1) in cells for x in range(5)] for y in range(5)]))
    assert all(m[0, y] is not None for y in range(5))
    assert mask[:, 4].sum() == 0
    d = GaussianMixtureBody().decode(g.ravel())
    assert d.body.count() == 5 and (d.body.width, d.body.height) == (1, 5)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.floats(1.0, 20.0))
def test_mixture_argmax_invariant_under_q_scaling(seed, c):
    g = np.random.default_rng(seed).uniform(0, 1, size=(4, 5, 4))
    g[..., 3] *= 5
    scaled = g.copy()
    scaled[..., 3] *= c
    after = material_map(scaled.ravel(), 5, 5, threshold=0.0)
    before = material_map(g.ravel(), 5, 5, threshold=0.0)
    assert [v for _, _, v in before.cells()] == [v for _, _, v in after.cells()]


def test_body_materials():
    g = np.zeros((4, 5, 4))
    for j, x in enumerate((1, 2, 3, 4)):
        g[j, 0] = [(x - 1) / 4, 0.0, 0.6, 2 * SQRT_2PI]
    d = GaussianMixtureBody(5, 1).decode(g.ravel())
    freqs = [d.body[x, 0].sds_frequency for x in range(4)]
    assert freqs == [25.0, 5.0, 8.0, 8.0]
    assert d.controller.functions[2, 0] == Expression("sin(2*pi*t)")
    assert d.controller.functions[3, 0] == Expression("sin(-2*pi*t)")


@pytest.mark.parametrize("rep,p", [
    (GaussianMixtureBody(), 80),
    (PhaseController(), 44),
    (EvoDevoController(), 132),
    (SensingMLP(shape_grid("worm")), 104),
    (SensingMLP(shape_grid("biped")), 228),
    (SensingMLP(shape_grid("tripod")), 400),
])
def test_decoder_dimensions_and_off_by_one(rep, p):
    assert rep.dimension == p
    for bad in (p - 1, p + 1):
        with pytest.raises(InvalidArgument):
            rep.decode(np.full(bad, 0.5))


def test_phase_controller_shift_by_pi_negates():
    rep = PhaseController(Grid(2, 1, MaterialSpec()))
    a = rep.decode(np.zeros(2)).controller.functions
    b = rep.decode(np.full(2, math.pi)).controller.functions
    for t in (0.1, 0.37, 1.9):
        assert b[0, 0](t) == pytest.approx(-a[0, 0](t), abs=1e-12)


def test_evodevo_reduces_to_phase_and_hits_endpoints():
    body = Grid(2, 1, MaterialSpec())
    phases = np.array([0.3, -1.2])
    evo = EvoDevoController(body).decode(np.column_stack([phases, np.zeros(2), np.zeros(2)]).ravel())
    ph = PhaseController(body).decode(phases)
    for t in (0.0, 0.4, 12.0):
        assert evo.controller.functions[1, 0](t) == pytest.approx(ph.controller.functions[1, 0](t))
    f = EvoDevoController(body, t_final=60.0).decode(np.array([0.3, 0.2, -0.4, 0, 0, 0])).controller.functions
    assert f[0, 0](0.0) == pytest.approx(math.sin(0.3) + 0.2)
    assert f[0, 0](60.0) == pytest.approx(math.sin(2 * math.pi * 60 + 0.3) - 0.4)


def test_sensing_decoder_layout():
    rep = SensingMLP(shape_grid("biped"))
    d = rep.decode(np.zeros(228))
    c = d.controller
    assert isinstance(c, MLPController)
    assert c.n_inputs == 6 * 6 + 1 and c.n_outputs == 6
    assert mlp_weight_count(c.n_inputs, c.hidden_layers, c.n_outputs) == 228
    assert sorted(str(s) for s in c.sensors[0, 0]) == sorted([
        "area_ratio:mean5", "area_ratio:diff5", "rotated_x_velocity:mean5",
        "rotated_x_velocity:diff5", "rotated_y_velocity:mean5", "rotated_y_velocity:diff5"])


def test_shapes():
    assert [shape_grid(s).count() for s in ("worm", "biped", "tripod")] == [4, 6, 8]
    tripod = shape_grid("tripod")
    assert [tripod[x, 0] is not None for x in range(5)] == [True, False, True, False, True]
    with pytest.raises(InvalidArgument):
        shape_grid("snake")


def test_relative_velocity_arithmetic():
    # a 5x3 body travelling 30 m in 60 s
    assert -(30.0 / 60.0) / max(5, 3) == pytest.approx(-0.1)
