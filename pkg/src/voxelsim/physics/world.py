"""Fixed-timestep 2-D world of square rigid bodies.

Bodies interact through explicit spring-damper forces, unilateral ropes,
rigid welds and frictional contacts (with a polyline terrain and between
bodies of different collision groups).  Constraints are solved with
sequential impulses; each time step is split into substeps so that the
explicit spring forces stay inside the stability region of semi-implicit
Euler whatever the spring frequencies are.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import InvalidArgument, InvalidConfiguration, SimulationDiverged
from ..grid import Vec2
from . import _kernels as K

log = logging.getLogger(__name__)

# Symplectic Euler with explicit damping is stable for a mode (omega, gamma)
# when (omega h)^2 + 2 gamma h <= 4; substeps keep the stiffest mode below
# this margin to leave room for pre-stress and contact stiffening.
STABILITY_MARGIN = 1.5


@dataclass
class Body:
    """Construction record of a square rigid body."""

    position: tuple[float, float] = (0.0, 0.0)
    half_side: float = 0.5
    mass: float = 1.0
    rotation: float = 0.0
    linear_velocity: tuple[float, float] = (0.0, 0.0)
    angular_velocity: float = 0.0
    linear_damping: float = 0.0
    angular_damping: float = 0.0
    friction: float = 0.2
    restitution: float = 0.0
    kinematic: bool = False
    group: int = -1

    @property
    def inertia(self) -> float:
        side = 2.0 * self.half_side
        return self.mass * side * side / 6.0


@dataclass(frozen=True)
class SpringDamper:
    body_a: int
    body_b: int
    anchor_a: tuple[float, float]
    anchor_b: tuple[float, float]
    rest_length: float
    frequency: float
    damping_ratio: float


@dataclass(frozen=True)
class Rope:
    body_a: int
    body_b: int
    anchor_a: tuple[float, float]
    anchor_b: tuple[float, float]
    max_length: float


@dataclass(frozen=True)
class WeldJoint:
    body_a: int
    body_b: int
    world_anchor: tuple[float, float]
    reference_angle: float


@dataclass
class Terrain:
    """x-monotone polyline; everything below it is solid ground."""

    profile: np.ndarray
    friction: float = 1.0
    restitution: float = 0.0

    def __post_init__(self):
        self.profile = np.ascontiguousarray(self.profile, dtype=np.float64).reshape(-1, 2)
        if len(self.profile) < 2:
            raise InvalidArgument("terrain needs at least two vertices")
        if np.any(np.diff(self.profile[:, 0]) <= 0):
            raise InvalidArgument("terrain x coordinates must be strictly increasing")

    def height_at(self, x: float) -> float:
        return float(np.interp(x, self.profile[:, 0], self.profile[:, 1]))

    def max_height(self, x0: float, x1: float) -> float:
        xs = self.profile[:, 0]
        inside = self.profile[(xs >= x0) & (xs <= x1), 1]
        ends = [self.height_at(x0), self.height_at(x1)]
        return float(max(np.max(inside) if len(inside) else -np.inf, *ends))


@dataclass
class Settings:
    dt: float = 1.0 / 60.0
    gravity: tuple[float, float] = (0.0, -9.81)
    velocity_iterations: int = 20
    position_iterations: int = 4
    baumgarte: float = 0.2
    linear_slop: float = 0.002
    contact_margin: float = 0.005
    max_correction: float = 0.2
    restitution_threshold: float = 1.0
    substeps: Optional[int] = None  # None: derived from spring stiffness

    def validate(self) -> None:
        if not self.dt > 0:
            raise InvalidArgument(f"dt must be positive, got {self.dt}")
        if self.velocity_iterations < 1 or self.position_iterations < 1:
            raise InvalidArgument("iteration counts must be >= 1")
        if self.substeps is not None and self.substeps < 1:
            raise InvalidArgument("substeps must be >= 1")


def _rot(angle: float, v) -> tuple[float, float]:
    c, s = math.cos(angle), math.sin(angle)
    return c * v[0] - s * v[1], s * v[0] + c * v[1]


def _inv_rot(angle: float, v) -> tuple[float, float]:
    c, s = math.cos(angle), math.sin(angle)
    return c * v[0] + s * v[1], -s * v[0] + c * v[1]


class World:
    """Simulation container.  Mutated only through its own methods."""

    def __init__(self, settings: Optional[Settings] = None, terrain: Optional[Terrain] = None):
        self.settings = settings or Settings()
        self.settings.validate()
        self.terrain = terrain
        self.step_count = 0
        self.warnings: dict[str, int] = {"kinematic_force": 0}
        self._next_group = 0

        self._bs = np.zeros((0, 6))
        self._bp = np.zeros((0, K.N_BODY_PROPS))
        self._bg = np.zeros((0, 2), dtype=np.int64)
        self._bf = np.zeros((0, 3))
        self._si = np.zeros((0, 2), dtype=np.int64)
        self._sf = np.zeros((0, K.N_SPRING_COLS))
        self._spring_params = np.zeros((0, 2))  # frequency, damping ratio
        self._ri = np.zeros((0, 2), dtype=np.int64)
        self._rf = np.zeros((0, K.N_ROPE_COLS))
        self._wi = np.zeros((0, 2), dtype=np.int64)
        self._wf = np.zeros((0, K.N_WELD_COLS))
        self._warn = np.zeros(4, dtype=np.int64)
        self._counts = np.zeros(2, dtype=np.int64)
        self._touching = np.zeros(0, dtype=np.int8)
        self._dirty = True
        self._substeps = 1

    # ------------------------------------------------------------------ build

    def new_group(self) -> int:
        g = self._next_group
        self._next_group += 1
        return g

    def add_body(self, body: Body) -> int:
        if not body.kinematic and not body.mass > 0:
            raise InvalidArgument("dynamic bodies need positive mass")
        if not body.half_side > 0:
            raise InvalidArgument("half_side must be positive")
        inertia = body.inertia
        dyn = not body.kinematic
        state = [body.position[0], body.position[1], body.rotation,
                 body.linear_velocity[0], body.linear_velocity[1], body.angular_velocity]
        props = [body.half_side, body.mass,
                 1.0 / body.mass if dyn else 0.0,
                 inertia, 1.0 / inertia if dyn else 0.0,
                 body.linear_damping, body.angular_damping,
                 body.friction, body.restitution]
        self._bs = np.vstack([self._bs, state])
        self._bp = np.vstack([self._bp, props])
        self._bg = np.vstack([self._bg, np.array([[body.group, int(body.kinematic)]], dtype=np.int64)])
        self._bf = np.vstack([self._bf, np.zeros(3)])
        self._touching = np.zeros(len(self._bs), dtype=np.int8)
        self._dirty = True
        return len(self._bs) - 1

    def _check_body(self, i: int) -> None:
        if not 0 <= i < self.n_bodies:
            raise InvalidArgument(f"unknown body {i}")

    def world_point(self, body: int, local) -> Vec2:
        x, y, a = self._bs[body, :3]
        dx, dy = _rot(a, local)
        return Vec2(x + dx, y + dy)

    def local_point(self, body: int, world_point) -> tuple[float, float]:
        x, y, a = self._bs[body, :3]
        return _inv_rot(a, (world_point[0] - x, world_point[1] - y))

    def effective_mass(self, a: int, b: int) -> float:
        ka = bool(self._bg[a, K.KINEMATIC])
        kb = bool(self._bg[b, K.KINEMATIC])
        if ka and kb:
            raise InvalidConfiguration("spring between two kinematic bodies")
        ma, mb = self._bp[a, K.MASS], self._bp[b, K.MASS]
        if ka:
            return mb
        if kb:
            return ma
        return ma * mb / (ma + mb)

    def add_spring(self, a: int, b: int, anchor_a, anchor_b, frequency: float,
                   damping_ratio: float, rest_length: Optional[float] = None) -> int:
        """Add a spring-damper between local anchors; rest length defaults to
        the current anchor distance."""
        self._check_body(a)
        self._check_body(b)
        if frequency < 0:
            raise InvalidArgument("spring frequency must be >= 0")
        if not 0 <= damping_ratio <= 1:
            raise InvalidArgument("damping ratio must lie in [0, 1]")
        if rest_length is None:
            rest_length = (self.world_point(b, anchor_b) - self.world_point(a, anchor_a)).norm()
        if not rest_length > 0:
            raise InvalidArgument("rest length must be positive")
        k, c = self._coefficients(a, b, frequency, damping_ratio)
        self._si = np.vstack([self._si, np.array([[a, b]], dtype=np.int64)])
        self._sf = np.vstack([self._sf, [anchor_a[0], anchor_a[1], anchor_b[0], anchor_b[1],
                                         rest_length, k, c]])
        self._spring_params = np.vstack([self._spring_params, [frequency, damping_ratio]])
        self._dirty = True
        return len(self._si) - 1

    def add_rope(self, a: int, b: int, anchor_a, anchor_b, max_length: Optional[float] = None) -> int:
        self._check_body(a)
        self._check_body(b)
        if max_length is None:
            max_length = (self.world_point(b, anchor_b) - self.world_point(a, anchor_a)).norm()
        if not max_length > 0:
            raise InvalidArgument("rope length must be positive")
        row = np.zeros(K.N_ROPE_COLS)
        row[:5] = [anchor_a[0], anchor_a[1], anchor_b[0], anchor_b[1], max_length]
        self._ri = np.vstack([self._ri, np.array([[a, b]], dtype=np.int64)])
        self._rf = np.vstack([self._rf, row])
        return len(self._ri) - 1

    def add_weld(self, a: int, b: int, world_anchor) -> int:
        self._check_body(a)
        self._check_body(b)
        if self._bg[a, K.KINEMATIC] and self._bg[b, K.KINEMATIC]:
            raise InvalidConfiguration("weld between two kinematic bodies")
        la = self.local_point(a, world_anchor)
        lb = self.local_point(b, world_anchor)
        ref = self._bs[b, K.A] - self._bs[a, K.A]
        row = np.zeros(K.N_WELD_COLS)
        row[:5] = [la[0], la[1], lb[0], lb[1], ref]
        self._wi = np.vstack([self._wi, np.array([[a, b]], dtype=np.int64)])
        self._wf = np.vstack([self._wf, row])
        return len(self._wi) - 1

    # ---------------------------------------------------------------- queries

    @property
    def n_bodies(self) -> int:
        return len(self._bs)

    @property
    def n_springs(self) -> int:
        return len(self._si)

    @property
    def n_ropes(self) -> int:
        return len(self._ri)

    @property
    def n_welds(self) -> int:
        return len(self._wi)

    @property
    def elapsed_time(self) -> float:
        return self.step_count * self.settings.dt

    @property
    def positions(self) -> np.ndarray:
        return self._bs[:, 0:2]

    @property
    def angles(self) -> np.ndarray:
        return self._bs[:, 2]

    @property
    def velocities(self) -> np.ndarray:
        return self._bs[:, 3:5]

    @property
    def angular_velocities(self) -> np.ndarray:
        return self._bs[:, 5]

    @property
    def half_sides(self) -> np.ndarray:
        return self._bp[:, K.HALF]

    @property
    def masses(self) -> np.ndarray:
        return self._bp[:, K.MASS]

    @property
    def touching(self) -> np.ndarray:
        return self._touching.astype(bool)

    @property
    def spring_rest_lengths(self) -> np.ndarray:
        return self._sf[:, K.S_REST]

    @property
    def substeps(self) -> int:
        self._prepare()
        return self._substeps

    def body_state(self, i: int) -> dict:
        x, y, a, vx, vy, w = self._bs[i]
        return {"position": Vec2(x, y), "rotation": a, "linear_velocity": Vec2(vx, vy),
                "angular_velocity": w}

    def set_body_state(self, i: int, position=None, rotation=None, linear_velocity=None,
                       angular_velocity=None) -> None:
        if position is not None:
            self._bs[i, 0:2] = position
        if rotation is not None:
            self._bs[i, 2] = rotation
        if linear_velocity is not None:
            self._bs[i, 3:5] = linear_velocity
        if angular_velocity is not None:
            self._bs[i, 5] = angular_velocity

    def is_kinematic(self, i: int) -> bool:
        return bool(self._bg[i, K.KINEMATIC])

    def group_of(self, i: int) -> int:
        return int(self._bg[i, K.GROUP])

    def spring(self, s: int) -> SpringDamper:
        a, b = self._si[s]
        row = self._sf[s]
        f, d = self._spring_params[s]
        return SpringDamper(int(a), int(b), (row[0], row[1]), (row[2], row[3]), float(row[4]),
                            float(f), float(d))

    def rope(self, r: int) -> Rope:
        a, b = self._ri[r]
        row = self._rf[r]
        return Rope(int(a), int(b), (row[0], row[1]), (row[2], row[3]), float(row[4]))

    def weld(self, j: int) -> WeldJoint:
        a, b = self._wi[j]
        row = self._wf[j]
        return WeldJoint(int(a), int(b), tuple(self.world_point(int(a), row[0:2])), float(row[4]))

    def rope_length(self, r: int) -> float:
        a, b = self._ri[r]
        row = self._rf[r]
        return (self.world_point(int(b), row[2:4]) - self.world_point(int(a), row[0:2])).norm()

    @property
    def rope_step_impulses(self) -> np.ndarray:
        """Total impulse each rope applied during the last step (<= 0)."""
        return self._rf[:, K.R_STEP_IMP]

    @property
    def rope_taut_substeps(self) -> np.ndarray:
        return self._rf[:, K.R_TAUT]

    def contacts(self) -> list[dict]:
        """Contacts solved in the last substep."""
        n = int(self._counts[0])
        out = []
        for k in range(n):
            row = self._cflt[k]
            out.append({
                "body_a": int(self._cint[k, K.CI_A]),
                "body_b": int(self._cint[k, K.CI_B]),
                "normal": Vec2(row[K.C_NX], row[K.C_NY]),
                "separation": float(row[K.C_SEP]),
                "normal_impulse": float(row[K.C_NIMP]),
                "tangent_impulse": float(row[K.C_TIMP]),
                "friction": float(row[K.C_FRIC]),
            })
        return out

    def weld_anchor_error(self, j: int) -> tuple[float, float]:
        """(relative anchor speed, anchor separation) of weld ``j``."""
        a, b = (int(v) for v in self._wi[j])
        row = self._wf[j]
        pa = self.world_point(a, row[0:2])
        pb = self.world_point(b, row[2:4])
        ra = pa - self._bs[a, 0:2]
        rb = pb - self._bs[b, 0:2]
        va = Vec2(self._bs[a, 3] - self._bs[a, 5] * ra.y, self._bs[a, 4] + self._bs[a, 5] * ra.x)
        vb = Vec2(self._bs[b, 3] - self._bs[b, 5] * rb.y, self._bs[b, 4] + self._bs[b, 5] * rb.x)
        return (vb - va).norm(), (pb - pa).norm()

    @property
    def weld_velocity_residuals(self) -> np.ndarray:
        """Relative anchor speed of every weld right after the last velocity solve."""
        if self._dirty or len(self._wk) != self.n_welds:
            return np.zeros(self.n_welds)
        return self._wk[:, 10].copy()

    @property
    def warning_counts(self) -> dict[str, int]:
        out = dict(self.warnings)
        out["degenerate_spring"] = int(self._warn[K.WARN_SPRING_DEGENERATE])
        out["contact_overflow"] = int(self._warn[K.WARN_CONTACT_OVERFLOW])
        return out

    # ----------------------------------------------------------------- forces

    def _coefficients(self, a: int, b: int, frequency: float, damping_ratio: float):
        m_eff = self.effective_mass(a, b)
        omega = 2.0 * math.pi * frequency
        k = m_eff * omega * omega
        c = 2.0 * damping_ratio * math.sqrt(k * m_eff)
        return k, c

    def spring_coefficients(self, s: int) -> tuple[float, float]:
        """(stiffness N/m, damping N*s/m) of spring ``s``."""
        return float(self._sf[s, K.S_K]), float(self._sf[s, K.S_C])

    def spring_length(self, s: int) -> float:
        a, b = self._si[s]
        row = self._sf[s]
        return (self.world_point(int(b), row[2:4]) - self.world_point(int(a), row[0:2])).norm()

    def spring_force(self, s: int) -> tuple[Vec2, Vec2]:
        """Axial spring-damper force on (body_a, body_b) at the current state."""
        a, b = (int(v) for v in self._si[s])
        row = self._sf[s]
        pa = self.world_point(a, row[0:2])
        pb = self.world_point(b, row[2:4])
        d = pb - pa
        length = d.norm()
        if length < 1e-9:
            self._warn[K.WARN_SPRING_DEGENERATE] += 1
            return Vec2(0.0, 0.0), Vec2(0.0, 0.0)
        u = d * (1.0 / length)
        ra = pa - self._bs[a, 0:2]
        rb = pb - self._bs[b, 0:2]
        va = Vec2(self._bs[a, 3] - self._bs[a, 5] * ra.y, self._bs[a, 4] + self._bs[a, 5] * ra.x)
        vb = Vec2(self._bs[b, 3] - self._bs[b, 5] * rb.y, self._bs[b, 4] + self._bs[b, 5] * rb.x)
        f = row[K.S_K] * (length - row[K.S_REST]) + row[K.S_C] * (vb - va).dot(u)
        return u * f, u * (-f)

    def set_rest_length(self, s: int, rest_length: float) -> None:
        if not rest_length > 0:
            raise InvalidArgument(f"rest length must be positive, got {rest_length}")
        self._sf[s, K.S_REST] = rest_length

    def set_rest_lengths(self, springs: np.ndarray, rest_lengths: np.ndarray) -> None:
        if np.any(~(rest_lengths > 0)):
            raise InvalidArgument("rest lengths must be positive")
        self._sf[springs, K.S_REST] = rest_lengths

    def apply_force(self, body: int, force, world_point=None) -> None:
        """Accumulate a force (and its torque about the body center) for the next step."""
        if self._bg[body, K.KINEMATIC]:
            self.warnings["kinematic_force"] += 1
            log.warning("ignoring force on kinematic body %d", body)
            return
        self._bf[body, 0] += force[0]
        self._bf[body, 1] += force[1]
        if world_point is not None:
            rx = world_point[0] - self._bs[body, 0]
            ry = world_point[1] - self._bs[body, 1]
            self._bf[body, 2] += rx * force[1] - ry * force[0]

    def apply_forces(self, bodies: np.ndarray, forces: np.ndarray) -> None:
        """Accumulate forces at body centers (no torque), vectorized."""
        dyn = self._bg[bodies, K.KINEMATIC] == 0
        np.add.at(self._bf[:, 0], bodies[dyn], forces[dyn, 0])
        np.add.at(self._bf[:, 1], bodies[dyn], forces[dyn, 1])

    def contact_query(self, body: int) -> bool:
        """Whether ``body`` touched anything outside its collision group in the last step."""
        return bool(self._touching[body])

    # ----------------------------------------------------------------- energy

    def kinetic_energy(self) -> float:
        dyn = self._bg[:, K.KINEMATIC] == 0
        v2 = np.sum(self._bs[dyn, 3:5] ** 2, axis=1)
        w2 = self._bs[dyn, 5] ** 2
        return float(0.5 * np.sum(self._bp[dyn, K.MASS] * v2 + self._bp[dyn, K.INERTIA] * w2))

    def elastic_energy(self) -> float:
        total = 0.0
        for s in range(self.n_springs):
            stretch = self.spring_length(s) - self._sf[s, K.S_REST]
            total += 0.5 * self._sf[s, K.S_K] * stretch * stretch
        return total

    # --------------------------------------------------------------- stepping

    def _modal_bounds(self) -> tuple[float, float]:
        """Upper bounds of the angular frequency and damping rate over all
        modes of the linearized spring network (mass-normalized)."""
        dyn = np.flatnonzero(self._bg[:, K.KINEMATIC] == 0)
        if len(dyn) == 0 or self.n_springs == 0:
            return 0.0, 0.0
        slot = -np.ones(self.n_bodies, dtype=np.int64)
        slot[dyn] = np.arange(len(dyn))
        ndof = 3 * len(dyn)
        stiff = np.zeros((ndof, ndof))
        damp = np.zeros((ndof, ndof))
        for s in range(self.n_springs):
            a, b = (int(v) for v in self._si[s])
            k, c = self._sf[s, K.S_K], self._sf[s, K.S_C]
            if k == 0.0 and c == 0.0:
                continue
            row = self._sf[s]
            pa = self.world_point(a, row[0:2])
            pb = self.world_point(b, row[2:4])
            d = pb - pa
            length = d.norm()
            if length < 1e-9:
                continue
            u = d * (1.0 / length)
            ra = pa - self._bs[a, 0:2]
            rb = pb - self._bs[b, 0:2]
            jac = np.zeros(ndof)
            if slot[a] >= 0:
                jac[3 * slot[a]:3 * slot[a] + 3] = [-u.x, -u.y, -ra.cross(u)]
            if slot[b] >= 0:
                jac[3 * slot[b]:3 * slot[b] + 3] = [u.x, u.y, rb.cross(u)]
            idx = np.flatnonzero(jac)
            outer = np.outer(jac[idx], jac[idx])
            stiff[np.ix_(idx, idx)] += k * outer
            damp[np.ix_(idx, idx)] += c * outer
        inv_sqrt_m = np.empty(ndof)
        inv_sqrt_m[0::3] = 1.0 / np.sqrt(self._bp[dyn, K.MASS])
        inv_sqrt_m[1::3] = inv_sqrt_m[0::3]
        inv_sqrt_m[2::3] = 1.0 / np.sqrt(self._bp[dyn, K.INERTIA])
        scale = inv_sqrt_m[:, None] * inv_sqrt_m[None, :]
        lam_k = _largest_eigenvalue(stiff * scale)
        lam_c = _largest_eigenvalue(damp * scale)
        return math.sqrt(max(lam_k, 0.0)), 0.5 * max(lam_c, 0.0)

    def _auto_substeps(self) -> int:
        omega, gamma = self._modal_bounds()
        n = 1
        while True:
            h = self.settings.dt / n
            if (omega * h) ** 2 + 2.0 * gamma * h <= STABILITY_MARGIN or n >= 10_000:
                return n
            n += 1

    def _prepare(self) -> None:
        if not self._dirty:
            return
        st = self.settings
        st.validate()
        if st.substeps is not None:
            self._substeps = int(st.substeps)
        else:
            self._substeps = self._auto_substeps()
        n = self.n_bodies
        cap = 8 * n + 64
        self._cint = np.zeros((cap, 3), dtype=np.int64)
        self._cflt = np.zeros((cap, K.N_CONTACT_COLS))
        self._pint = np.zeros((cap, 3), dtype=np.int64)
        self._pflt = np.zeros((cap, K.N_CONTACT_COLS))
        self._counts[:] = 0
        self._acc = np.zeros((n, 3))
        self._wk = np.zeros((self.n_welds, 11))
        self._rk = np.zeros((self.n_ropes, 7))
        groups = self._bg[:, K.GROUP]
        kin = self._bg[:, K.KINEMATIC]
        # pairwise collision is only needed if two bodies could ever collide
        pairs = 0
        for i in range(n):
            for j in range(i + 1, n):
                if (groups[i] < 0 or groups[i] != groups[j]) and not (kin[i] and kin[j]):
                    pairs = 1
                    break
            if pairs:
                break
        self._icfg = np.array([st.velocity_iterations, st.position_iterations, self._substeps, pairs],
                              dtype=np.int64)
        t = self.terrain
        self._tp = t.profile if t is not None else np.zeros((0, 2))
        self._cfg = np.zeros(K.N_SETTINGS)
        self._cfg[K.G_DT] = st.dt
        self._cfg[K.G_GX], self._cfg[K.G_GY] = st.gravity
        self._cfg[K.G_BAUMGARTE] = st.baumgarte
        self._cfg[K.G_SLOP] = st.linear_slop
        self._cfg[K.G_MARGIN] = st.contact_margin
        self._cfg[K.G_MAX_CORR] = st.max_correction
        self._cfg[K.G_REST_THRESH] = st.restitution_threshold
        self._cfg[K.G_T_FRIC] = t.friction if t is not None else 0.0
        self._cfg[K.G_T_REST] = t.restitution if t is not None else 0.0
        self._dirty = False

    def step(self, n: int = 1) -> None:
        """Advance ``n`` time steps of ``settings.dt``."""
        if n <= 0:
            return
        self._prepare()
        bad, done = K.advance(n, self._bs, self._bp, self._bg, self._bf, self._si, self._sf,
                              self._ri, self._rf, self._wi, self._wf, self._tp, self._cfg,
                              self._icfg, self._cint, self._cflt, self._pint, self._pflt,
                              self._counts, self._touching, self._warn, self._acc, self._wk,
                              self._rk)
        self.step_count += int(done)
        if bad >= 0:
            raise SimulationDiverged(int(bad), self.elapsed_time)


def _largest_eigenvalue(mat: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric positive semi-definite matrix."""
    if mat.shape[0] <= 1500:
        return float(np.linalg.eigvalsh(mat)[-1])
    return _power_iteration(mat)


def _power_iteration(mat: np.ndarray, iters: int = 300) -> float:
    # deterministic start vector with components in every direction
    v = 1.0 + 0.01 * np.arange(mat.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = mat @ v
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
    return lam * 1.05


def step(world: World) -> World:
    world.step()
    return world


def spring_coefficients(world: World, spring: int) -> tuple[float, float]:
    return world.spring_coefficients(spring)


def spring_force(world: World, spring: int) -> tuple[Vec2, Vec2]:
    return world.spring_force(spring)


def apply_force(world: World, body: int, force, world_point=None) -> None:
    world.apply_force(body, force, world_point)


def set_rest_length(world: World, spring: int, rest_length: float) -> None:
    world.set_rest_length(spring, rest_length)


def contact_query(world: World, body: int) -> bool:
    return world.contact_query(body)
