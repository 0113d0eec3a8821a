"""Experiment configuration files (YAML).

A document describes materials, a body drawn as character rows, a
controller, a task, optional EA settings and output paths::

    seed: 1
    materials:
      h: {sds_frequency: 25}
      s: {sds_frequency: 5, scaffolding: EC}
    body: ["ssss", "hhhh"]          # top row first, '.' is empty
    controller:
      type: time_function
      function: "sin(-2*pi*t + pi*x/4)"
    task:
      type: locomotion
      duration: 60
      measures: [travel_velocity, average_squared_control_sum]

Validation happens before anything is simulated; errors name the field
and the line it appears on.
"""

from __future__ import annotations

import re
import string
from dataclasses import fields
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np
import yaml

from .control import Expression, MLPController, TimeFunctionController
from .errors import InvalidArgument
from .evolution.ea import EAConfig
from .grid import Grid
from .physics import Settings
from .sensing import SensorSpec
from .tasks.locomotion import LocomotionConfig, MeasureKind
from .tasks.terrain import FlatTerrain, UnevenTerrain
from .voxel import ActuationMode, MaterialSpec, parse_scaffolding, scaffolding_label
from .vsr import VSRDescription


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads floats like 1e-3 (YAML 1.2 style) as numbers."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


class ConfigError(InvalidArgument):
    """Configuration document is missing, malformed or inconsistent."""

    def __init__(self, message: str, line: Optional[int] = None, field_path: str = ""):
        where = []
        if field_path:
            where.append(f"field {field_path}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message}" + (f" ({', '.join(where)})" if where else ""))
        self.line = line
        self.field_path = field_path


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_COUNT = {"type": "integer", "minimum": 0}

MATERIAL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "side_length": _POS,
        "mass_side_ratio": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
        "mass_linear_damping": _NONNEG,
        "mass_angular_damping": _NONNEG,
        "mass_mass": _POS,
        "mass_friction": _NONNEG,
        "mass_restitution": _POS,
        "sds_frequency": _NONNEG,
        "sds_damping_ratio": {"type": "number", "minimum": 0, "maximum": 1},
        "max_force": _NONNEG,
        "max_area_change": {"type": "number", "minimum": 0, "maximum": 1},
        "scaffolding": {"type": "string", "pattern": "^(all|[EIXC+]*)$"},
        "ropes_enabled": {"type": "boolean"},
        "actuation_mode": {"enum": ["area", "force"]},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["materials", "body", "controller"],
    "properties": {
        "seed": {"type": "integer"},
        "materials": {
            "type": "object",
            "minProperties": 1,
            "propertyNames": {"pattern": "^[A-Za-z0-9]$"},
            "additionalProperties": MATERIAL_SCHEMA,
        },
        "body": {"type": "array", "minItems": 1, "items": {"type": "string", "minLength": 1}},
        "controller": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": ["time_function", "mlp"]},
                "function": {"type": ["string", "number"]},
                "cells": {"type": "object", "additionalProperties": {"type": ["string", "number"]}},
                "sensors": {"type": "array", "items": {"type": "string"}},
                "driving_function": {"type": ["string", "null"]},
                "hidden_layers": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "weights": {"type": "array", "items": _NUM},
            },
            "additionalProperties": False,
        },
        "physics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": _POS,
                "gravity": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "velocity_iterations": {"type": "integer", "minimum": 1},
                "position_iterations": {"type": "integer", "minimum": 1},
                "substeps": {"type": ["integer", "null"], "minimum": 1},
            },
        },
        "task": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["locomotion"]},
                "duration": _POS,
                "control_step_interval": _COUNT,
                "measures": {"type": "array", "items": {"enum": [m.value for m in MeasureKind]}},
                "terrain": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {
                        "type": {"enum": ["flat", "uneven"]},
                        "length": _POS,
                        "amplitude": _NONNEG,
                        "segment_length": _POS,
                        "seed": {"type": "integer"},
                    },
                },
            },
        },
        "ea": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_pop": {"type": "integer", "minimum": 1},
                "n_tour": {"type": "integer", "minimum": 1},
                "n_gen": _COUNT,
                "p_crossover": {"type": "number", "minimum": 0, "maximum": 1},
                "p_mutation": {"type": "number", "minimum": 0, "maximum": 1},
                "mutation_sigma": _POS,
                "diversity_retries": _COUNT,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "trace": {"type": ["string", "null"]},
                "outcome": {"type": ["string", "null"]},
                "frames": {"type": ["string", "null"]},
            },
        },
    },
}


def _node_line(root, path) -> Optional[int]:
    """1-based line of the YAML node at ``path`` (deepest existing ancestor)."""
    node = root
    line = node.start_mark.line + 1 if node is not None else None
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    line = k.start_mark.line + 1
                    break
            if nxt is None:
                break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def parse_config(text: str) -> dict:
    """Parse and validate a configuration document."""
    try:
        root = yaml.compose(text, Loader=_Loader)
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from None
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping", 1)
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        raise ConfigError(err.message, _node_line(root, path), ".".join(map(str, path)) or "<root>")
    try:
        _check_semantics(doc)
    except ConfigError as exc:
        if exc.line is None and exc.field_path:
            raise ConfigError(str(exc).split(" (field")[0], _node_line(root, exc.field_path.split(".")),
                              exc.field_path) from None
        raise
    return doc


def load_config(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from None
    return parse_config(text)


def dump_config(doc: dict) -> str:
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def _check_semantics(doc: dict) -> None:
    rows = doc["body"]
    if len({len(r) for r in rows}) != 1:
        raise ConfigError("body rows must all have the same length", field_path="body")
    keys = set(doc["materials"])
    for r, row in enumerate(rows):
        for ch in row:
            if ch != "." and ch not in keys:
                raise ConfigError(f"body uses undefined material {ch!r}", field_path=f"body.{r}")
    for name, m in doc["materials"].items():
        try:
            material_from_dict(m).validate()
        except InvalidArgument as exc:
            raise ConfigError(str(exc), field_path=f"materials.{name}") from None
    ctrl = doc["controller"]
    try:
        if ctrl["type"] == "time_function":
            if "function" not in ctrl and "cells" not in ctrl:
                raise ConfigError("time_function controller needs 'function' or 'cells'",
                                  field_path="controller")
            for expr in [ctrl.get("function"), *ctrl.get("cells", {}).values()]:
                if isinstance(expr, str):
                    Expression(expr)
        else:
            for s in ctrl.get("sensors", []):
                SensorSpec.parse(s)
            if ctrl.get("driving_function"):
                Expression(ctrl["driving_function"])
    except InvalidArgument as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), field_path="controller") from None
    ea = doc.get("ea", {})
    if "p_crossover" in ea or "p_mutation" in ea:
        pc = ea.get("p_crossover", 1 - ea.get("p_mutation", 0.2))
        pm = ea.get("p_mutation", 1 - pc)
        if abs(pc + pm - 1) > 1e-12:
            raise ConfigError("p_crossover + p_mutation must equal 1", field_path="ea")


# ------------------------------------------------------------ conversions

_MATERIAL_DEFAULT = MaterialSpec()


def material_from_dict(d: dict) -> MaterialSpec:
    kw = dict(d)
    if "scaffolding" in kw:
        kw["scaffolding"] = parse_scaffolding(kw["scaffolding"])
    if "actuation_mode" in kw:
        kw["actuation_mode"] = ActuationMode(kw["actuation_mode"])
    for k, v in list(kw.items()):
        if isinstance(v, int) and not isinstance(v, bool):
            kw[k] = float(v)
    return MaterialSpec(**kw)


def material_to_dict(m: MaterialSpec) -> dict:
    out = {}
    for f in fields(MaterialSpec):
        v = getattr(m, f.name)
        if v == getattr(_MATERIAL_DEFAULT, f.name):
            continue
        if f.name == "scaffolding":
            v = scaffolding_label(v)
        elif f.name == "actuation_mode":
            v = v.value
        out[f.name] = v
    return out


def _cell_key(x: int, y: int) -> str:
    return f"{x},{y}"


def _parse_cell_key(key: str) -> tuple[int, int]:
    try:
        x, y = (int(v) for v in key.split(","))
    except ValueError:
        raise ConfigError(f"cell key {key!r} must look like 'x,y'", field_path="controller.cells") from None
    return x, y


def description_from_config(doc: dict) -> VSRDescription:
    materials = {k: material_from_dict(v) for k, v in doc["materials"].items()}
    body = Grid.from_rows([[None if ch == "." else materials[ch] for ch in row] for row in doc["body"]])
    ctrl = doc["controller"]
    if ctrl["type"] == "time_function":
        funcs: Grid = Grid(body.width, body.height)
        default = ctrl.get("function")
        for x, y, _ in body.occupied():
            if default is not None:
                funcs[x, y] = str(default)
        for key, expr in ctrl.get("cells", {}).items():
            x, y = _parse_cell_key(key)
            if not (0 <= x < body.width and 0 <= y < body.height) or body[x, y] is None:
                raise ConfigError(f"function given for empty cell {key}", field_path="controller.cells")
            funcs[x, y] = str(expr)
        controller = TimeFunctionController(funcs)
    else:
        specs = [SensorSpec.parse(s) for s in ctrl.get("sensors", [])]
        sensors = body.map(lambda _: list(specs))
        controller = MLPController(sensors, np.array(ctrl.get("weights", []), dtype=np.float64),
                                   list(ctrl.get("hidden_layers", [])), ctrl.get("driving_function"))
    description = VSRDescription(body, controller)
    try:
        description.validate()
    except InvalidArgument as exc:
        raise ConfigError(str(exc), field_path="controller" if "MLP" in str(exc) else "body") from None
    return description


def description_to_config(description: VSRDescription) -> dict:
    """Serialize a description (time-function expressions or MLP weights)."""
    letters = iter(string.ascii_lowercase + string.ascii_uppercase + string.digits)
    keys: dict = {}
    materials: dict = {}
    for _, _, spec in description.body.occupied():
        if spec not in keys:
            keys[spec] = next(letters)
            materials[keys[spec]] = material_to_dict(spec)
    rows = ["".join("." if m is None else keys[m] for m in row) for row in description.body.rows()]
    c = description.controller
    if isinstance(c, TimeFunctionController):
        cells = {}
        for x, y, fn in c.functions.occupied():
            if not isinstance(fn, Expression):
                raise InvalidArgument("only expression time functions can be serialized")
            cells[_cell_key(x, y)] = fn.text
        texts = set(cells.values())
        ctrl: dict = {"type": "time_function"}
        if len(texts) == 1:
            ctrl["function"] = texts.pop()
        else:
            ctrl["cells"] = cells
    else:
        lists = {tuple(str(s) for s in specs) for _, _, specs in c.sensors.occupied()}
        if len(lists) != 1:
            raise InvalidArgument("only uniform sensor layouts can be serialized")
        drive = c.driving_function
        if drive is not None and not isinstance(drive, Expression):
            raise InvalidArgument("only expression driving functions can be serialized")
        ctrl = {"type": "mlp", "sensors": list(lists.pop()),
                "driving_function": drive.text if drive is not None else None,
                "hidden_layers": list(c.hidden_layers),
                "weights": [float(w) for w in c.weights]}
    return {"materials": materials, "body": rows, "controller": ctrl}


def settings_from_config(doc: dict) -> Settings:
    p = doc.get("physics", {})
    s = Settings()
    if "dt" in p:
        s.dt = float(p["dt"])
    if "gravity" in p:
        s.gravity = (float(p["gravity"][0]), float(p["gravity"][1]))
    for k in ("velocity_iterations", "position_iterations", "substeps"):
        if k in p:
            setattr(s, k, p[k])
    return s


def locomotion_from_config(doc: dict, duration: Optional[float] = None) -> LocomotionConfig:
    t = doc.get("task", {})
    terrain_doc = t.get("terrain", {"type": "flat"})
    kw = {k: v for k, v in terrain_doc.items() if k != "type"}
    terrain = FlatTerrain(**kw) if terrain_doc["type"] == "flat" else UnevenTerrain(**kw)
    measures = [MeasureKind(m) for m in t.get("measures", ["travel_velocity"])]
    return LocomotionConfig(
        duration=float(duration if duration is not None else t.get("duration", 60.0)),
        control_step_interval=int(t.get("control_step_interval", 1)),
        settings=settings_from_config(doc),
        terrain=terrain,
        measures=measures,
    )


def ea_from_config(doc: dict, seed: Optional[int] = None) -> EAConfig:
    e = dict(doc.get("ea", {}))
    if "p_crossover" in e and "p_mutation" not in e:
        e["p_mutation"] = 1.0 - e["p_crossover"]
    if "p_mutation" in e and "p_crossover" not in e:
        e["p_crossover"] = 1.0 - e["p_mutation"]
    cfg = EAConfig(**e)
    cfg.seed = seed if seed is not None else int(doc.get("seed", 0))
    return cfg
