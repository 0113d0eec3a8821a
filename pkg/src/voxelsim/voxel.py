"""Single voxel: four square masses held together by spring-damper scaffolding.

Masses are numbered 1..4 clockwise from the top-left corner (stored 0..3).
All local anchor points are expressed in the owning mass' frame.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import InvalidArgument
from .grid import Vec2
from .physics import Body, World

log = logging.getLogger(__name__)


class ScaffoldingGroup(enum.Enum):
    SIDE_EXTERNAL = "E"
    SIDE_INTERNAL = "I"
    SIDE_CROSS = "X"
    CENTRAL_CROSS = "C"


GROUP_SIZES = {
    ScaffoldingGroup.SIDE_EXTERNAL: 4,
    ScaffoldingGroup.SIDE_INTERNAL: 4,
    ScaffoldingGroup.SIDE_CROSS: 8,
    ScaffoldingGroup.CENTRAL_CROSS: 2,
}

ALL_GROUPS = frozenset(ScaffoldingGroup)


def parse_scaffolding(text: str) -> frozenset:
    """``"EIXC"``-style letter set to groups; ``"all"`` selects every group."""
    if text.strip().lower() == "all":
        return ALL_GROUPS
    try:
        return frozenset(ScaffoldingGroup(ch) for ch in text.replace("+", "").strip())
    except ValueError:
        raise InvalidArgument(f"unknown scaffolding letters in {text!r}") from None


def scaffolding_label(groups) -> str:
    return "".join(g.value for g in ScaffoldingGroup if g in groups)


class ActuationMode(enum.Enum):
    FORCE = "force"
    AREA = "area"


@dataclass(frozen=True)
class MaterialSpec:
    side_length: float = 3.0
    mass_side_ratio: float = 0.3
    mass_linear_damping: float = 1.0
    mass_angular_damping: float = 1.0
    mass_mass: float = 1.0
    mass_friction: float = 100.0
    mass_restitution: float = 0.1
    sds_frequency: float = 8.0
    sds_damping_ratio: float = 0.3
    max_force: float = 1000.0
    max_area_change: float = 0.2
    scaffolding: frozenset = ALL_GROUPS
    ropes_enabled: bool = True
    actuation_mode: ActuationMode = ActuationMode.AREA

    def validate(self) -> "MaterialSpec":
        def need(ok: bool, name: str, domain: str):
            if not ok:
                raise InvalidArgument(f"{name}={getattr(self, name)!r} outside {domain}")

        need(self.side_length > 0, "side_length", "]0,+inf[")
        need(0 < self.mass_side_ratio <= 0.5, "mass_side_ratio", "]0,0.5]")
        need(self.mass_linear_damping >= 0, "mass_linear_damping", "[0,+inf[")
        need(self.mass_angular_damping >= 0, "mass_angular_damping", "[0,+inf[")
        need(self.mass_mass > 0, "mass_mass", "]0,+inf[")
        need(self.mass_friction >= 0, "mass_friction", "[0,+inf[")
        need(self.mass_restitution > 0, "mass_restitution", "]0,+inf[")
        need(self.sds_frequency >= 0, "sds_frequency", "[0,+inf[")
        need(0 <= self.sds_damping_ratio <= 1, "sds_damping_ratio", "[0,1]")
        need(self.max_force >= 0, "max_force", "[0,+inf[")
        need(0 <= self.max_area_change <= 1, "max_area_change", "[0,1]")
        for v in fields(self)[:11]:
            need(math.isfinite(getattr(self, v.name)), v.name, "finite values")
        if not all(isinstance(g, ScaffoldingGroup) for g in self.scaffolding):
            raise InvalidArgument(f"scaffolding={self.scaffolding!r} must hold ScaffoldingGroup values")
        if not isinstance(self.actuation_mode, ActuationMode):
            raise InvalidArgument(f"actuation_mode={self.actuation_mode!r} is not an ActuationMode")
        side_groups = {ScaffoldingGroup.SIDE_EXTERNAL, ScaffoldingGroup.SIDE_INTERNAL}
        if self.mass_side_ratio == 0.5 and side_groups & set(self.scaffolding):
            raise InvalidArgument("mass_side_ratio=0.5 leaves no gap for side springs")
        return self

    def with_(self, **changes) -> "MaterialSpec":
        return replace(self, **changes)

    @property
    def mass_side(self) -> float:
        return self.mass_side_ratio * self.side_length

    def spring_count(self) -> int:
        return sum(GROUP_SIZES[g] for g in self.scaffolding)


# mass center offsets from the voxel center in units of (l - l_m l)/2
_MASS_SIGNS = np.array([[-1.0, 1.0], [1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]])

# For each side: (mass a, mass b, corner of a on the outer edge facing the gap,
# corner of b on the outer edge, corner of a on the inner edge, corner of b on
# the inner edge); corners in units of the mass half side.
_SIDES = (
    (0, 1, (1, 1), (-1, 1), (1, -1), (-1, -1)),     # top
    (1, 2, (1, -1), (1, 1), (-1, -1), (-1, 1)),     # right
    (2, 3, (-1, -1), (1, -1), (-1, 1), (1, 1)),     # bottom
    (3, 0, (-1, 1), (-1, -1), (1, 1), (1, -1)),     # left
)


def scaffold_layout(spec: MaterialSpec) -> list[tuple[ScaffoldingGroup, int, int, tuple, tuple]]:
    """(group, mass a, mass b, local anchor a, local anchor b) for every enabled spring."""
    h = spec.mass_side / 2.0
    out = []
    groups = spec.scaffolding
    for a, b, oa, ob, ia, ib in _SIDES:
        def pt(c):
            return (c[0] * h, c[1] * h)
        if ScaffoldingGroup.SIDE_EXTERNAL in groups:
            out.append((ScaffoldingGroup.SIDE_EXTERNAL, a, b, pt(oa), pt(ob)))
        if ScaffoldingGroup.SIDE_INTERNAL in groups:
            out.append((ScaffoldingGroup.SIDE_INTERNAL, a, b, pt(ia), pt(ib)))
        if ScaffoldingGroup.SIDE_CROSS in groups:
            out.append((ScaffoldingGroup.SIDE_CROSS, a, b, pt(oa), pt(ib)))
            out.append((ScaffoldingGroup.SIDE_CROSS, a, b, pt(ia), pt(ob)))
    if ScaffoldingGroup.CENTRAL_CROSS in groups:
        out.append((ScaffoldingGroup.CENTRAL_CROSS, 0, 2, (0.0, 0.0), (0.0, 0.0)))
        out.append((ScaffoldingGroup.CENTRAL_CROSS, 1, 3, (0.0, 0.0), (0.0, 0.0)))
    return out


@dataclass
class Voxel:
    masses: tuple[int, int, int, int]
    springs: np.ndarray                 # spring indices in the world
    spring_groups: tuple                # ScaffoldingGroup per spring
    rest_lengths: np.ndarray            # rest-configuration lengths
    center_deltas: np.ndarray           # (n_springs, 2) mass b center minus mass a center at rest
    anchor_deltas: np.ndarray           # (n_springs, 2) local anchor b minus local anchor a
    ropes: np.ndarray
    spec: MaterialSpec
    world: World = field(repr=False)
    rest_area: float = 0.0
    rest_mass_quad_area: float = 0.0
    last_control: float = 0.0
    _last_angle: float = 0.0


def build_voxel(spec: MaterialSpec, origin, world: World, group: int | None = None) -> Voxel:
    """Create the four masses, scaffolding and ropes of a voxel centered at ``origin``."""
    spec.validate()
    l = spec.side_length
    s = spec.mass_side
    d = (l - s) / 2.0
    if group is None:
        group = world.new_group()
    masses = []
    for sx, sy in _MASS_SIGNS:
        masses.append(world.add_body(Body(
            position=(origin[0] + sx * d, origin[1] + sy * d),
            half_side=s / 2.0,
            mass=spec.mass_mass,
            linear_damping=spec.mass_linear_damping,
            angular_damping=spec.mass_angular_damping,
            friction=spec.mass_friction,
            restitution=spec.mass_restitution,
            group=group,
        )))
    springs, tags, rests, dcs, das = [], [], [], [], []
    for g, a, b, pa, pb in scaffold_layout(spec):
        idx = world.add_spring(masses[a], masses[b], pa, pb, spec.sds_frequency, spec.sds_damping_ratio)
        springs.append(idx)
        tags.append(g)
        rests.append(world.spring_rest_lengths[idx])
        dcs.append((_MASS_SIGNS[b] - _MASS_SIGNS[a]) * d)
        das.append((pb[0] - pa[0], pb[1] - pa[1]))
    ropes = []
    if spec.ropes_enabled:
        # slack so that the largest commanded expansion is not blocked
        slack = math.sqrt(1.0 + spec.max_area_change)
        diag = 2.0 * d * math.sqrt(2.0)
        for a, b in ((0, 2), (1, 3)):
            ropes.append(world.add_rope(masses[a], masses[b], (0.0, 0.0), (0.0, 0.0), diag * slack))
    vox = Voxel(
        masses=tuple(masses),
        springs=np.array(springs, dtype=np.int64),
        spring_groups=tuple(tags),
        rest_lengths=np.array(rests, dtype=np.float64),
        center_deltas=np.array(dcs, dtype=np.float64).reshape(-1, 2),
        anchor_deltas=np.array(das, dtype=np.float64).reshape(-1, 2),
        ropes=np.array(ropes, dtype=np.int64),
        spec=spec,
        world=world,
        rest_area=l * l,
        rest_mass_quad_area=(l - s) ** 2,
    )
    return vox


def area_scale(f: float, max_area_change: float) -> float:
    """l'/l for control value ``f``."""
    return math.sqrt(1.0 - f * max_area_change)


def area_rest_lengths(voxel: Voxel, f: float) -> np.ndarray:
    """Spring rest lengths whose equilibrium is the voxel with side l'.

    The mass squares are rigid, so scaling every rest length by l'/l would
    leave the side springs short of the target; instead each spring gets its
    length in the rest layout with mass centers moved to l'/l of their offset.
    """
    if f == 0.0:
        return voxel.rest_lengths.copy()
    s = area_scale(f, voxel.spec.max_area_change)
    v = s * voxel.center_deltas + voxel.anchor_deltas
    return np.maximum(np.hypot(v[:, 0], v[:, 1]), 1e-6 * voxel.spec.side_length)


def clamp_control(f: float) -> float:
    if math.isnan(f):
        log.warning("NaN control value replaced by 0")
        return 0.0
    if f < -1.0 or f > 1.0:
        log.warning("control value %g clamped to [-1, 1]", f)
        return min(1.0, max(-1.0, f))
    return f


def actuate(voxel: Voxel, f: float) -> None:
    f = clamp_control(float(f))
    voxel.last_control = f
    world = voxel.world
    if voxel.spec.actuation_mode is ActuationMode.AREA:
        if len(voxel.springs):
            world.set_rest_lengths(voxel.springs, area_rest_lengths(voxel, f))
        return
    if f == 0.0:
        return
    center = voxel_center(voxel)
    mag = f * voxel.spec.max_force
    for m in voxel.masses:
        p = world.positions[m]
        dx, dy = center.x - p[0], center.y - p[1]
        dist = math.hypot(dx, dy)
        if dist < 1e-12:
            continue
        world.apply_force(m, (mag * dx / dist, mag * dy / dist))


def voxel_center(voxel: Voxel) -> Vec2:
    p = voxel.world.positions[list(voxel.masses)]
    return Vec2(float(np.mean(p[:, 0])), float(np.mean(p[:, 1])))


def voxel_velocity(voxel: Voxel) -> Vec2:
    v = voxel.world.velocities[list(voxel.masses)]
    return Vec2(float(np.mean(v[:, 0])), float(np.mean(v[:, 1])))


def direction_average(p: np.ndarray) -> tuple[float, float]:
    """Sum of unit vectors 1->2 and 4->3 for mass centers ``p`` (4x2)."""
    u12 = p[1] - p[0]
    u43 = p[2] - p[3]
    n12 = math.hypot(*u12)
    n43 = math.hypot(*u43)
    sx = sy = 0.0
    if n12 > 0:
        sx += u12[0] / n12
        sy += u12[1] / n12
    if n43 > 0:
        sx += u43[0] / n43
        sy += u43[1] / n43
    return sx, sy


def voxel_angle(voxel: Voxel) -> float:
    sx, sy = direction_average(voxel.world.positions[list(voxel.masses)])
    if sx == 0.0 and sy == 0.0:
        return voxel._last_angle
    voxel._last_angle = math.atan2(sy, sx)
    return voxel._last_angle


def shoelace(p: np.ndarray) -> float:
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


# self-intersecting (negative orientation) mass quads seen by voxel_area
area_warnings = {"self_intersecting": 0}


def voxel_area(voxel: Voxel) -> float:
    # masses run clockwise, so the signed shoelace area is negative at rest
    signed = -shoelace(voxel.world.positions[list(voxel.masses)])
    if signed < 0:
        area_warnings["self_intersecting"] += 1
    return voxel.rest_area * abs(signed) / voxel.rest_mass_quad_area


def area_ratio(voxel: Voxel) -> float:
    return voxel_area(voxel) / voxel.rest_area
