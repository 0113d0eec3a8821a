"""Controllers: per-voxel time functions and a sensing MLP.

Time functions are written as small arithmetic expressions over ``t``
(seconds) and the voxel grid coordinates ``x`` and ``y``, e.g.
``"sin(-2*pi*t + pi*x/4)"``.  Expressions are parsed into a restricted
syntax tree, so configuration files cannot execute arbitrary code.
"""

from __future__ import annotations

import ast
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import InvalidArgument
from .grid import Grid
from .sensing import KIND_INDEX, SensorHistory, SensorSpec

log = logging.getLogger(__name__)

_FUNCS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "tanh": math.tanh,
    "exp": math.exp, "log": math.log, "sqrt": math.sqrt, "abs": abs,
    "min": min, "max": max, "floor": math.floor, "ceil": math.ceil,
    "sign": lambda v: float(np.sign(v)),
    "clip": lambda v, lo, hi: min(hi, max(lo, v)),
    "square": lambda v: 1.0 if math.sin(v) >= 0 else -1.0,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_VARS = ("t", "x", "y")
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
          ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.Mod, ast.USub, ast.UAdd,
          ast.IfExp, ast.Compare, ast.Lt, ast.LtE, ast.Gt, ast.GtE)


class Expression:
    """Safe arithmetic expression in ``t``, ``x`` and ``y``."""

    __slots__ = ("text", "_code")

    def __init__(self, text: str):
        self.text = str(text).strip()
        try:
            tree = ast.parse(self.text, mode="eval")
        except SyntaxError as exc:
            raise InvalidArgument(f"bad expression {self.text!r}: {exc.msg}") from None
        for node in ast.walk(tree):
            if not isinstance(node, _NODES):
                raise InvalidArgument(f"expression {self.text!r} uses unsupported {type(node).__name__}")
            if isinstance(node, ast.Name) and node.id not in _FUNCS and node.id not in _CONSTS \
                    and node.id not in _VARS:
                raise InvalidArgument(f"unknown name {node.id!r} in expression {self.text!r}")
            if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
                raise InvalidArgument(f"only builtin math functions may be called in {self.text!r}")
            if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
                raise InvalidArgument(f"non-numeric constant in {self.text!r}")
        # float literals: integer powers like 10**10**10 would never finish
        for node in ast.walk(tree):
            if isinstance(node, ast.Constant) and not isinstance(node.value, bool):
                node.value = float(node.value)
        self._code = compile(tree, "<expr>", "eval")

    def __call__(self, t: float, x: float = 0.0, y: float = 0.0) -> float:
        ns = {"t": t, "x": x, "y": y}
        ns.update(_CONSTS)
        ns.update(_FUNCS)
        return float(eval(self._code, {"__builtins__": {}}, ns))

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Expression) and other.text == self.text

    def __hash__(self) -> int:
        return hash(self.text)


TimeFn = Union[Expression, Callable[[float], float]]


def as_time_function(fn) -> TimeFn:
    if isinstance(fn, Expression) or callable(fn):
        return fn
    if isinstance(fn, (int, float)):
        return Expression(repr(float(fn)))
    return Expression(fn)


def _evaluate(fn: TimeFn, t: float, x: int, y: int) -> float:
    try:
        if isinstance(fn, Expression):
            return fn(t, x, y)
        return float(fn(t))
    except (ArithmeticError, ValueError):
        return math.nan


@dataclass
class TimeFunctionController:
    """Open-loop control: voxel (x, y) gets ``functions[x, y](t)``."""

    functions: Grid

    def __post_init__(self):
        self.functions = self.functions.map(as_time_function)


@dataclass
class MLPController:
    """Feed-forward network from aggregated sensor readings to control values."""

    sensors: Grid                       # list[SensorSpec] per occupied cell
    weights: np.ndarray
    hidden_layers: list[int] = field(default_factory=list)
    driving_function: Optional[TimeFn] = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if self.driving_function is not None:
            self.driving_function = as_time_function(self.driving_function)

    @property
    def n_inputs(self) -> int:
        n = sum(len(specs) for _, _, specs in self.sensors.occupied())
        return n + (1 if self.driving_function is not None else 0)

    @property
    def n_outputs(self) -> int:
        return self.sensors.count()

    def layer_sizes(self) -> list[int]:
        return [self.n_inputs, *self.hidden_layers, self.n_outputs]


ControllerSpec = Union[TimeFunctionController, MLPController]


def mlp_weight_count(inputs: int, hidden: Sequence[int], outputs: int) -> int:
    sizes = [inputs, *hidden, outputs]
    if inputs < 1 or outputs < 1 or any(h < 1 for h in hidden):
        raise InvalidArgument(f"invalid MLP topology {sizes}")
    # a single bias unit feeds the first layer only
    return sum((a + (i == 0)) * b for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])))


def mlp_forward(x: np.ndarray, sizes: Sequence[int], weights: np.ndarray) -> np.ndarray:
    """tanh network; layer weights are row-major (b, a) blocks, the first one
    (b, a+1) with the bias column last."""
    x = np.asarray(x, dtype=np.float64)
    if len(sizes) < 2:
        raise InvalidArgument("an MLP needs at least an input and an output layer")
    expected = mlp_weight_count(sizes[0], sizes[1:-1], sizes[-1])
    if len(weights) != expected:
        raise InvalidArgument(f"MLP expects {expected} weights, got {len(weights)}")
    if len(x) != sizes[0]:
        raise InvalidArgument(f"MLP expects {sizes[0]} inputs, got {len(x)}")
    pos = 0
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        if i == 0:
            w = weights[:b * (a + 1)].reshape(b, a + 1)
            pos = b * (a + 1)
            x = np.tanh(w[:, :a] @ x + w[:, a])
        else:
            w = weights[pos:pos + b * a].reshape(b, a)
            pos += b * a
            x = np.tanh(w @ x)
    return x


def validate_controller(controller: ControllerSpec, body: Grid) -> None:
    """Check the controller matches the body's shape and topology."""
    if isinstance(controller, TimeFunctionController):
        f = controller.functions
        if (f.width, f.height) != (body.width, body.height):
            raise InvalidArgument(f"function grid is {f.width}x{f.height}, body is {body.width}x{body.height}")
        for x, y, _ in body.occupied():
            if f[x, y] is None:
                raise InvalidArgument(f"no time function for voxel ({x}, {y})")
        return
    if isinstance(controller, MLPController):
        s = controller.sensors
        if (s.width, s.height) != (body.width, body.height):
            raise InvalidArgument(f"sensor grid is {s.width}x{s.height}, body is {body.width}x{body.height}")
        for x, y, _ in body.occupied():
            if s[x, y] is None:
                raise InvalidArgument(f"no sensor list for voxel ({x}, {y})")
        for x, y, _ in s.occupied():
            if body[x, y] is None:
                raise InvalidArgument(f"sensors given for empty cell ({x}, {y})")
        expected = mlp_weight_count(controller.n_inputs, controller.hidden_layers, controller.n_outputs)
        if len(controller.weights) != expected:
            raise InvalidArgument(f"MLP expects {expected} weights, got {len(controller.weights)}")
        return
    raise InvalidArgument(f"unknown controller type {type(controller).__name__}")


class ControllerRuntime:
    """Per-VSR evaluation state: cell order, history, input gather plan."""

    def __init__(self, controller: ControllerSpec, cells: list[tuple[int, int]], control_period: float):
        self.controller = controller
        self.cells = cells
        self.history: Optional[SensorHistory] = None
        self.nan_warnings = 0
        if isinstance(controller, MLPController):
            plan = []
            for v, (x, y) in enumerate(cells):
                for spec in controller.sensors[x, y]:
                    plan.append((v, KIND_INDEX[spec.kind], spec.aggregate))
            self._plan = plan
            self._groups: dict = {}
            for i, (v, k, agg) in enumerate(plan):
                self._groups.setdefault(agg, ([], [], []))
                g = self._groups[agg]
                g[0].append(i)
                g[1].append(v)
                g[2].append(k)
            self._groups = {a: tuple(np.array(c, dtype=np.int64) for c in g) for a, g in self._groups.items()}
            capacity = max([agg.n for _, _, agg in plan], default=1)
            self.history = SensorHistory(len(cells), capacity, control_period)
            self._sizes = controller.layer_sizes()
            self._inputs = np.zeros(controller.n_inputs)

    @property
    def needs_sensors(self) -> bool:
        return self.history is not None

    def inputs(self, t: float) -> np.ndarray:
        x = self._inputs
        for agg, (idx, vox, kind) in self._groups.items():
            x[idx] = self.history.aggregate(agg)[vox, kind]
        if self.controller.driving_function is not None:
            x[-1] = _evaluate(self.controller.driving_function, t, 0, 0)
        return x

    def control(self, t: float, sensor_readings: Optional[np.ndarray] = None) -> np.ndarray:
        """Control values in cell order; sensor readings are pushed first."""
        c = self.controller
        if isinstance(c, TimeFunctionController):
            out = np.array([_evaluate(c.functions[x, y], t, x, y) for x, y in self.cells])
        else:
            if sensor_readings is not None:
                self.history.push(t, sensor_readings)
            out = mlp_forward(self.inputs(t), self._sizes, c.weights)
        bad = ~np.isfinite(out)
        if bad.any():
            self.nan_warnings += int(bad.sum())
            log.warning("non-finite control value replaced by 0")
            out = np.where(bad, 0.0, out)
        return np.clip(out, -1.0, 1.0)
