from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from voxelsim.config import (
    ConfigError,
    description_from_config,
    description_to_config,
    dump_config,
    ea_from_config,
    load_config,
    locomotion_from_config,
    parse_config,
)
from voxelsim.control import MLPController
from voxelsim.evolution import SensingMLP, shape_grid
from voxelsim.tasks import MeasureKind, UnevenTerrain

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

WORM = """\
materials:
  h: {sds_frequency: 25}
  s: {sds_frequency: 5, scaffolding: EC}
body:
  - "ssss"
  - "hhhh"
controller:
  type: time_function
  function: "sin(-2*pi*t + pi*x/4)"
task:
  type: locomotion
  duration: 20
"""


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.name)
def test_shipped_configs_load(path):
    doc = load_config(path)
    d = description_from_config(doc)
    assert d.n_voxels > 0
    locomotion_from_config(doc)


def test_worm_fields():
    doc = parse_config(WORM)
    d = description_from_config(doc)
    assert (d.body.width, d.body.height) == (4, 2)
    # rows are listed top first
    assert d.body[0, 1].sds_frequency == 5.0 and d.body[0, 0].sds_frequency == 25.0
    cfg = locomotion_from_config(doc)
    assert cfg.duration == 20 and cfg.measures == [MeasureKind.TRAVEL_VELOCITY]
    assert locomotion_from_config(doc, duration=0.5).n_steps == 30


def test_description_round_trip():
    doc = parse_config(WORM)
    d = description_from_config(doc)
    again = description_from_config(parse_config(dump_config(description_to_config(d))))
    assert [m for _, _, m in d.body.cells()] == [m for _, _, m in again.body.cells()]
    assert [f for _, _, f in d.controller.functions.cells()] == [f for _, _, f in again.controller.functions.cells()]


@given(st.lists(st.floats(-10, 10), min_size=104, max_size=104))
def test_mlp_weights_round_trip_exactly(weights):
    d = SensingMLP(shape_grid("worm")).decode(np.array(weights))
    again = description_from_config(parse_config(dump_config(description_to_config(d))))
    assert isinstance(again.controller, MLPController)
    assert np.array_equal(again.controller.weights, d.controller.weights)
    assert again.controller.n_inputs == 25


def test_uneven_terrain_and_ea_sections():
    doc = parse_config(WORM + "  terrain: {type: uneven, amplitude: 0.5, seed: 7}\n"
                              "ea: {n_pop: 12, n_tour: 3, p_crossover: 0.6}\nseed: 4\n")
    t = locomotion_from_config(doc).terrain
    assert isinstance(t, UnevenTerrain) and t.amplitude == 0.5 and t.seed == 7
    ea = ea_from_config(doc)
    assert (ea.n_pop, ea.n_tour, ea.seed) == (12, 3, 4)
    assert ea.p_mutation == pytest.approx(0.4)
    assert ea_from_config(doc, seed=9).seed == 9


@pytest.mark.parametrize("text,field,line", [
    (WORM.replace("sds_frequency: 25", "sds_frequency: -25"), "materials.h.sds_frequency", 2),
    (WORM.replace("scaffolding: EC", "scaffolding: 12"), "materials.s.scaffolding", 3),
    (WORM.replace('  - "hhhh"', '  - "hhh"'), "body", None),
    (WORM.replace('  - "hhhh"', '  - "hhqh"'), "body.1", None),
    (WORM.replace("type: time_function", "type: magic"), "controller.type", 8),
    (WORM.replace("duration: 20", "duration: fast"), "task.duration", 12),
])
def test_errors_name_field_and_line(text, field, line):
    with pytest.raises(ConfigError) as info:
        description_from_config(parse_config(text))
    err = info.value
    assert err.field_path == field
    if line is not None:
        assert err.line == line
        assert f"line {line}" in str(err)


def test_malformed_yaml_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config("body:\n  - [unclosed\n")
    assert info.value.line is not None


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="bodyy|Additional"):
        parse_config(WORM + "bodyy: 3\n")


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/robot.yaml")


def test_bad_function_expression():
    with pytest.raises(ConfigError):
        description_from_config(parse_config(WORM.replace("sin(-2*pi*t + pi*x/4)", "import os")))


def test_exponent_floats_are_numbers():
    doc = parse_config(WORM.replace("sds_frequency: 25", "sds_frequency: 2.5e1").replace("duration: 20", "duration: 2e1"))
    assert description_from_config(doc).body[0, 0].sds_frequency == 25.0
    assert locomotion_from_config(doc).duration == 20.0
