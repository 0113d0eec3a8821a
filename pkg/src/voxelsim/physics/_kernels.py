"""Compiled inner loops of the physics engine.

All state is held in flat float64/int64 arrays owned by :class:`World`; the
column layouts are the module-level constants below.  Contacts use a single
manifold form: a reference plane fixed in body A (normal and point in A's
local frame) and a clip point fixed in body B.  Body index -1 denotes the
static world frame (the terrain).
"""

import math

import numpy as np
from numba import njit

# body state
X, Y, A, VX, VY, W = 0, 1, 2, 3, 4, 5
# body properties
HALF, MASS, INV_MASS, INERTIA, INV_INERTIA, LIN_DAMP, ANG_DAMP, FRICTION, RESTITUTION = range(9)
N_BODY_PROPS = 9
# body ints
GROUP, KINEMATIC = 0, 1

# springs: local anchors, rest length, stiffness, damping
S_AX, S_AY, S_BX, S_BY, S_REST, S_K, S_C = range(7)
N_SPRING_COLS = 7

# ropes: local anchors, max length, impulse over last step, taut substeps, accumulated impulse
R_AX, R_AY, R_BX, R_BY, R_MAX, R_STEP_IMP, R_TAUT, R_ACC = range(8)
N_ROPE_COLS = 8

# welds: local anchors, reference angle, accumulated impulse (x, y, angular)
J_AX, J_AY, J_BX, J_BY, J_REF, J_PX, J_PY, J_PZ = range(8)
N_WELD_COLS = 8

# contacts
(C_LNX, C_LNY, C_LPX, C_LPY, C_LCX, C_LCY, C_NIMP, C_TIMP, C_FRIC, C_REST,
 C_NMASS, C_TMASS, C_VBIAS, C_RAX, C_RAY, C_RBX, C_RBY, C_NX, C_NY, C_SEP) = range(20)
N_CONTACT_COLS = 20
CI_A, CI_B, CI_KEY = 0, 1, 2

# float settings
G_DT, G_GX, G_GY, G_BAUMGARTE, G_SLOP, G_MARGIN, G_MAX_CORR, G_REST_THRESH, G_T_FRIC, G_T_REST = range(10)
N_SETTINGS = 10
# int settings
I_VEL_IT, I_POS_IT, I_SUBSTEPS, I_PAIRS = range(4)

# warning counters
WARN_SPRING_DEGENERATE, WARN_CONTACT_OVERFLOW = 0, 1

# square vertices (CCW) and outward face normals; face i runs from vertex i to i+1
_VX = np.array([-1.0, 1.0, 1.0, -1.0])
_VY = np.array([-1.0, -1.0, 1.0, 1.0])
_NXF = np.array([0.0, 1.0, 0.0, -1.0])
_NYF = np.array([-1.0, 0.0, 1.0, 0.0])


@njit(cache=True)
def _pose(bs, i):
    if i < 0:
        return 0.0, 0.0, 1.0, 0.0
    a = bs[i, A]
    return bs[i, X], bs[i, Y], math.cos(a), math.sin(a)


@njit(cache=True)
def _inv(bp, i):
    if i < 0:
        return 0.0, 0.0
    return bp[i, INV_MASS], bp[i, INV_INERTIA]


@njit(cache=True)
def _contact_key(a, b, feature):
    return ((a + 1) << 42) | ((b + 1) << 21) | feature


@njit(cache=True)
def _push_contact(cint, cflt, n, cap, a, b, feature, lnx, lny, lpx, lpy, lcx, lcy,
                  fric, rest, warn):
    if n >= cap:
        warn[WARN_CONTACT_OVERFLOW] += 1
        return n
    cint[n, CI_A] = a
    cint[n, CI_B] = b
    cint[n, CI_KEY] = _contact_key(a, b, feature)
    cflt[n, C_LNX] = lnx
    cflt[n, C_LNY] = lny
    cflt[n, C_LPX] = lpx
    cflt[n, C_LPY] = lpy
    cflt[n, C_LCX] = lcx
    cflt[n, C_LCY] = lcy
    cflt[n, C_NIMP] = 0.0
    cflt[n, C_TIMP] = 0.0
    cflt[n, C_FRIC] = fric
    cflt[n, C_REST] = rest
    return n + 1


@njit(cache=True)
def _terrain_height_segment(tp, x):
    """Index of the terrain segment spanning ``x`` or -1 outside the profile."""
    nt = tp.shape[0]
    if nt < 2 or x < tp[0, 0] or x >= tp[nt - 1, 0]:
        return -1
    j = np.searchsorted(tp[:, 0], x, side="right") - 1
    if j > nt - 2:
        j = nt - 2
    return j


@njit(cache=True)
def _collide_terrain(i, bs, bp, tp, cfg, cint, cflt, n, cap, touching, warn):
    nt = tp.shape[0]
    if nt < 2:
        return n
    margin = cfg[G_MARGIN]
    fric = math.sqrt(bp[i, FRICTION] * cfg[G_T_FRIC])
    rest = max(bp[i, RESTITUTION], cfg[G_T_REST])
    x, y, c, s = _pose(bs, i)
    h = bp[i, HALF]
    wx = np.empty(4)
    wy = np.empty(4)
    for k in range(4):
        lx = _VX[k] * h
        ly = _VY[k] * h
        wx[k] = x + c * lx - s * ly
        wy[k] = y + s * lx + c * ly
    # square vertices below the segment under them; keep the two deepest
    best_sep0 = 1e300
    best_sep1 = 1e300
    best_k0 = -1
    best_k1 = -1
    best_j0 = -1
    best_j1 = -1
    for k in range(4):
        j = _terrain_height_segment(tp, wx[k])
        if j < 0:
            continue
        tx = tp[j + 1, 0] - tp[j, 0]
        ty = tp[j + 1, 1] - tp[j, 1]
        ln = math.sqrt(tx * tx + ty * ty)
        nx = -ty / ln
        ny = tx / ln
        sep = (wx[k] - tp[j, 0]) * nx + (wy[k] - tp[j, 1]) * ny
        if sep >= margin:
            continue
        if sep < best_sep0:
            best_sep1, best_k1, best_j1 = best_sep0, best_k0, best_j0
            best_sep0, best_k0, best_j0 = sep, k, j
        elif sep < best_sep1:
            best_sep1, best_k1, best_j1 = sep, k, j
    for m in range(2):
        k = best_k0 if m == 0 else best_k1
        j = best_j0 if m == 0 else best_j1
        if k < 0:
            continue
        tx = tp[j + 1, 0] - tp[j, 0]
        ty = tp[j + 1, 1] - tp[j, 1]
        ln = math.sqrt(tx * tx + ty * ty)
        n = _push_contact(cint, cflt, n, cap, -1, i, j * 4 + k, -ty / ln, tx / ln,
                          tp[j, 0], tp[j, 1], _VX[k] * h, _VY[k] * h, fric, rest, warn)
        touching[i] = 1
    # convex terrain peaks poking into the square
    minx = min(min(wx[0], wx[1]), min(wx[2], wx[3]))
    maxx = max(max(wx[0], wx[1]), max(wx[2], wx[3]))
    j0 = np.searchsorted(tp[:, 0], minx, side="left")
    if j0 < 1:
        j0 = 1
    for j in range(j0, nt - 1):
        px = tp[j, 0]
        if px > maxx:
            break
        py = tp[j, 1]
        cr = (px - tp[j - 1, 0]) * (tp[j + 1, 1] - py) - (py - tp[j - 1, 1]) * (tp[j + 1, 0] - px)
        if cr >= 0.0:
            continue
        qx = c * (px - x) + s * (py - y)
        qy = -s * (px - x) + c * (py - y)
        best = -1e300
        face = -1
        for f in range(4):
            sep = _NXF[f] * qx + _NYF[f] * qy - h
            if sep > best:
                best = sep
                face = f
        if best >= margin:
            continue
        n = _push_contact(cint, cflt, n, cap, i, -1, (1 << 20) + j * 4 + face,
                          _NXF[face], _NYF[face], _NXF[face] * h, _NYF[face] * h,
                          px, py, fric, rest, warn)
        touching[i] = 1
    return n


@njit(cache=True)
def _max_separation(xa, ya, ca, sa, ha, xb, yb, cb, sb, hb):
    best = -1e300
    edge = 0
    for f in range(4):
        nx = ca * _NXF[f] - sa * _NYF[f]
        ny = sa * _NXF[f] + ca * _NYF[f]
        # face point: vertex f of A
        vx = xa + ca * _VX[f] * ha - sa * _VY[f] * ha
        vy = ya + sa * _VX[f] * ha + ca * _VY[f] * ha
        smin = 1e300
        for k in range(4):
            wx = xb + cb * _VX[k] * hb - sb * _VY[k] * hb
            wy = yb + sb * _VX[k] * hb + cb * _VY[k] * hb
            d = nx * (wx - vx) + ny * (wy - vy)
            if d < smin:
                smin = d
        if smin > best:
            best = smin
            edge = f
    return best, edge


@njit(cache=True)
def _collide_boxes(ia, ib, bs, bp, cfg, cint, cflt, n, cap, touching, warn):
    margin = cfg[G_MARGIN]
    xa, ya, ca, sa = _pose(bs, ia)
    xb, yb, cb, sb = _pose(bs, ib)
    ha = bp[ia, HALF]
    hb = bp[ib, HALF]
    sep_a, edge_a = _max_separation(xa, ya, ca, sa, ha, xb, yb, cb, sb, hb)
    if sep_a > margin:
        return n
    sep_b, edge_b = _max_separation(xb, yb, cb, sb, hb, xa, ya, ca, sa, ha)
    if sep_b > margin:
        return n
    if sep_b > sep_a + 0.1 * cfg[G_SLOP]:
        ref, inc, edge = ib, ia, edge_b
    else:
        ref, inc, edge = ia, ib, edge_a
    xr, yr, cr, sr = _pose(bs, ref)
    xi, yi, ci, si = _pose(bs, inc)
    hr = bp[ref, HALF]
    hi = bp[inc, HALF]
    nrx = cr * _NXF[edge] - sr * _NYF[edge]
    nry = sr * _NXF[edge] + cr * _NYF[edge]
    # incident face: most anti-parallel normal
    inc_edge = 0
    dmin = 1e300
    for f in range(4):
        nix = ci * _NXF[f] - si * _NYF[f]
        niy = si * _NXF[f] + ci * _NYF[f]
        d = nix * nrx + niy * nry
        if d < dmin:
            dmin = d
            inc_edge = f
    e1 = edge
    e2 = (edge + 1) % 4
    v11x = xr + cr * _VX[e1] * hr - sr * _VY[e1] * hr
    v11y = yr + sr * _VX[e1] * hr + cr * _VY[e1] * hr
    v12x = xr + cr * _VX[e2] * hr - sr * _VY[e2] * hr
    v12y = yr + sr * _VX[e2] * hr + cr * _VY[e2] * hr
    tx = v12x - v11x
    ty = v12y - v11y
    tl = math.sqrt(tx * tx + ty * ty)
    tx /= tl
    ty /= tl
    k1 = inc_edge
    k2 = (inc_edge + 1) % 4
    px = np.empty(2)
    py = np.empty(2)
    px[0] = xi + ci * _VX[k1] * hi - si * _VY[k1] * hi
    py[0] = yi + si * _VX[k1] * hi + ci * _VY[k1] * hi
    px[1] = xi + ci * _VX[k2] * hi - si * _VY[k2] * hi
    py[1] = yi + si * _VX[k2] * hi + ci * _VY[k2] * hi
    # clip against the two side planes of the reference face
    for side in range(2):
        if side == 0:
            nx, ny = -tx, -ty
            off = -(tx * v11x + ty * v11y)
        else:
            nx, ny = tx, ty
            off = tx * v12x + ty * v12y
        d0 = nx * px[0] + ny * py[0] - off
        d1 = nx * px[1] + ny * py[1] - off
        if d0 > 0.0 and d1 > 0.0:
            return n
        if d0 > 0.0:
            r = d0 / (d0 - d1)
            px[0] = px[0] + r * (px[1] - px[0])
            py[0] = py[0] + r * (py[1] - py[0])
        elif d1 > 0.0:
            r = d0 / (d0 - d1)
            px[1] = px[0] + r * (px[1] - px[0])
            py[1] = py[0] + r * (py[1] - py[0])
    front = nrx * v11x + nry * v11y
    mx = 0.5 * (_VX[e1] + _VX[e2]) * hr
    my = 0.5 * (_VY[e1] + _VY[e2]) * hr
    fric = math.sqrt(bp[ia, FRICTION] * bp[ib, FRICTION])
    rest = max(bp[ia, RESTITUTION], bp[ib, RESTITUTION])
    for m in range(2):
        sep = nrx * px[m] + nry * py[m] - front
        if sep >= margin:
            continue
        dx = px[m] - xi
        dy = py[m] - yi
        lcx = ci * dx + si * dy
        lcy = -si * dx + ci * dy
        n = _push_contact(cint, cflt, n, cap, ref, inc, (1 << 19) + edge * 8 + inc_edge * 2 + m,
                          _NXF[edge], _NYF[edge], mx, my, lcx, lcy, fric, rest, warn)
        touching[ia] = 1
        touching[ib] = 1
    return n


@njit(cache=True)
def _detect(bs, bp, bg, tp, cfg, icfg, cint, cflt, touching, warn):
    nb = bs.shape[0]
    cap = cint.shape[0]
    n = 0
    for i in range(nb):
        if bg[i, KINEMATIC] == 0:
            n = _collide_terrain(i, bs, bp, tp, cfg, cint, cflt, n, cap, touching, warn)
    if icfg[I_PAIRS] != 0:
        margin = cfg[G_MARGIN]
        for i in range(nb):
            for j in range(i + 1, nb):
                gi = bg[i, GROUP]
                if gi >= 0 and gi == bg[j, GROUP]:
                    continue
                if bg[i, KINEMATIC] != 0 and bg[j, KINEMATIC] != 0:
                    continue
                reach = (bp[i, HALF] + bp[j, HALF]) * 1.4142135623730951 + margin
                if abs(bs[i, X] - bs[j, X]) > reach or abs(bs[i, Y] - bs[j, Y]) > reach:
                    continue
                n = _collide_boxes(i, j, bs, bp, cfg, cint, cflt, n, cap, touching, warn)
    return n


@njit(cache=True)
def _warm_match(cint, cflt, n, pint, pflt, np_):
    if np_ == 0:
        return
    keys = pint[:np_, CI_KEY].copy()
    order = np.argsort(keys)
    sorted_keys = keys[order]
    for k in range(n):
        key = cint[k, CI_KEY]
        pos = np.searchsorted(sorted_keys, key)
        if pos < np_ and sorted_keys[pos] == key:
            p = order[pos]
            cflt[k, C_NIMP] = pflt[p, C_NIMP]
            cflt[k, C_TIMP] = pflt[p, C_TIMP]


@njit(cache=True)
def _world_manifold(bs, cint, cflt, k):
    """Current normal, contact point and separation of contact ``k``."""
    a = cint[k, CI_A]
    b = cint[k, CI_B]
    xa, ya, ca, sa = _pose(bs, a)
    xb, yb, cb, sb = _pose(bs, b)
    nx = ca * cflt[k, C_LNX] - sa * cflt[k, C_LNY]
    ny = sa * cflt[k, C_LNX] + ca * cflt[k, C_LNY]
    ppx = xa + ca * cflt[k, C_LPX] - sa * cflt[k, C_LPY]
    ppy = ya + sa * cflt[k, C_LPX] + ca * cflt[k, C_LPY]
    cpx = xb + cb * cflt[k, C_LCX] - sb * cflt[k, C_LCY]
    cpy = yb + sb * cflt[k, C_LCX] + cb * cflt[k, C_LCY]
    sep = (cpx - ppx) * nx + (cpy - ppy) * ny
    return nx, ny, cpx - 0.5 * sep * nx, cpy - 0.5 * sep * ny, sep


@njit(cache=True)
def _velocity_of(bs, i, rx, ry):
    if i < 0:
        return 0.0, 0.0
    w = bs[i, W]
    return bs[i, VX] - w * ry, bs[i, VY] + w * rx


@njit(cache=True)
def _apply_impulse(bs, bp, i, px, py, rx, ry, sign):
    if i < 0:
        return
    im = bp[i, INV_MASS]
    ii = bp[i, INV_INERTIA]
    bs[i, VX] += sign * im * px
    bs[i, VY] += sign * im * py
    bs[i, W] += sign * ii * (rx * py - ry * px)


@njit(cache=True)
def _prepare_contacts(bs, bp, cfg, cint, cflt, n):
    thresh = cfg[G_REST_THRESH]
    for k in range(n):
        a = cint[k, CI_A]
        b = cint[k, CI_B]
        nx, ny, px, py, sep = _world_manifold(bs, cint, cflt, k)
        xa, ya, _, _ = _pose(bs, a)
        xb, yb, _, _ = _pose(bs, b)
        rax = px - xa
        ray = py - ya
        rbx = px - xb
        rby = py - yb
        ma, ia = _inv(bp, a)
        mb, ib = _inv(bp, b)
        rna = rax * ny - ray * nx
        rnb = rbx * ny - rby * nx
        kn = ma + mb + ia * rna * rna + ib * rnb * rnb
        tx = ny
        ty = -nx
        rta = rax * ty - ray * tx
        rtb = rbx * ty - rby * tx
        kt = ma + mb + ia * rta * rta + ib * rtb * rtb
        cflt[k, C_NMASS] = 1.0 / kn if kn > 0.0 else 0.0
        cflt[k, C_TMASS] = 1.0 / kt if kt > 0.0 else 0.0
        cflt[k, C_RAX] = rax
        cflt[k, C_RAY] = ray
        cflt[k, C_RBX] = rbx
        cflt[k, C_RBY] = rby
        cflt[k, C_NX] = nx
        cflt[k, C_NY] = ny
        cflt[k, C_SEP] = sep
        vax, vay = _velocity_of(bs, a, rax, ray)
        vbx, vby = _velocity_of(bs, b, rbx, rby)
        vn = (vbx - vax) * nx + (vby - vay) * ny
        cflt[k, C_VBIAS] = -cflt[k, C_REST] * vn if vn < -thresh else 0.0


@njit(cache=True)
def _warm_start_contacts(bs, bp, cint, cflt, n):
    for k in range(n):
        nx = cflt[k, C_NX]
        ny = cflt[k, C_NY]
        px = cflt[k, C_NIMP] * nx + cflt[k, C_TIMP] * ny
        py = cflt[k, C_NIMP] * ny - cflt[k, C_TIMP] * nx
        _apply_impulse(bs, bp, cint[k, CI_A], px, py, cflt[k, C_RAX], cflt[k, C_RAY], -1.0)
        _apply_impulse(bs, bp, cint[k, CI_B], px, py, cflt[k, C_RBX], cflt[k, C_RBY], 1.0)


@njit(cache=True)
def _solve_contacts(bs, bp, cint, cflt, n):
    for k in range(n):
        a = cint[k, CI_A]
        b = cint[k, CI_B]
        nx = cflt[k, C_NX]
        ny = cflt[k, C_NY]
        rax = cflt[k, C_RAX]
        ray = cflt[k, C_RAY]
        rbx = cflt[k, C_RBX]
        rby = cflt[k, C_RBY]
        # normal first so the final friction clamp sees the final normal impulse
        vax, vay = _velocity_of(bs, a, rax, ray)
        vbx, vby = _velocity_of(bs, b, rbx, rby)
        vn = (vbx - vax) * nx + (vby - vay) * ny
        lam = -cflt[k, C_NMASS] * (vn - cflt[k, C_VBIAS])
        old = cflt[k, C_NIMP]
        new = old + lam
        if new < 0.0:
            new = 0.0
        lam = new - old
        cflt[k, C_NIMP] = new
        _apply_impulse(bs, bp, a, lam * nx, lam * ny, rax, ray, -1.0)
        _apply_impulse(bs, bp, b, lam * nx, lam * ny, rbx, rby, 1.0)
        tx = ny
        ty = -nx
        vax, vay = _velocity_of(bs, a, rax, ray)
        vbx, vby = _velocity_of(bs, b, rbx, rby)
        vt = (vbx - vax) * tx + (vby - vay) * ty
        lam = -cflt[k, C_TMASS] * vt
        limit = cflt[k, C_FRIC] * cflt[k, C_NIMP]
        old = cflt[k, C_TIMP]
        new = old + lam
        if new > limit:
            new = limit
        elif new < -limit:
            new = -limit
        lam = new - old
        cflt[k, C_TIMP] = new
        _apply_impulse(bs, bp, a, lam * tx, lam * ty, rax, ray, -1.0)
        _apply_impulse(bs, bp, b, lam * tx, lam * ty, rbx, rby, 1.0)


@njit(cache=True)
def _position_contacts(bs, bp, cfg, cint, cflt, n):
    beta = cfg[G_BAUMGARTE]
    slop = cfg[G_SLOP]
    max_corr = cfg[G_MAX_CORR]
    for k in range(n):
        a = cint[k, CI_A]
        b = cint[k, CI_B]
        nx, ny, px, py, sep = _world_manifold(bs, cint, cflt, k)
        corr = beta * (sep + slop)
        if corr > 0.0:
            continue
        if corr < -max_corr:
            corr = -max_corr
        ma, ia = _inv(bp, a)
        mb, ib = _inv(bp, b)
        xa, ya, _, _ = _pose(bs, a)
        xb, yb, _, _ = _pose(bs, b)
        rax = px - xa
        ray = py - ya
        rbx = px - xb
        rby = py - yb
        rna = rax * ny - ray * nx
        rnb = rbx * ny - rby * nx
        kk = ma + mb + ia * rna * rna + ib * rnb * rnb
        if kk <= 0.0:
            continue
        imp = -corr / kk
        if a >= 0:
            bs[a, X] -= ma * imp * nx
            bs[a, Y] -= ma * imp * ny
            bs[a, A] -= ia * imp * rna
        if b >= 0:
            bs[b, X] += mb * imp * nx
            bs[b, Y] += mb * imp * ny
            bs[b, A] += ib * imp * rnb


@njit(cache=True)
def _weld_arms(bs, wf, a, b, j):
    ca = math.cos(bs[a, A])
    sa = math.sin(bs[a, A])
    cb = math.cos(bs[b, A])
    sb = math.sin(bs[b, A])
    rax = ca * wf[j, J_AX] - sa * wf[j, J_AY]
    ray = sa * wf[j, J_AX] + ca * wf[j, J_AY]
    rbx = cb * wf[j, J_BX] - sb * wf[j, J_BY]
    rby = sb * wf[j, J_BX] + cb * wf[j, J_BY]
    return rax, ray, rbx, rby


@njit(cache=True)
def _solve33(k11, k12, k13, k22, k23, k33, b1, b2, b3):
    # symmetric 3x3 by Cramer's rule
    c1 = k22 * k33 - k23 * k23
    c2 = k13 * k23 - k12 * k33
    c3 = k12 * k23 - k13 * k22
    det = k11 * c1 + k12 * c2 + k13 * c3
    if det == 0.0:
        return 0.0, 0.0, 0.0
    inv = 1.0 / det
    x1 = inv * (c1 * b1 + c2 * b2 + c3 * b3)
    x2 = inv * (c2 * b1 + (k11 * k33 - k13 * k13) * b2 + (k12 * k13 - k11 * k23) * b3)
    x3 = inv * (c3 * b1 + (k12 * k13 - k11 * k23) * b2 + (k11 * k22 - k12 * k12) * b3)
    return x1, x2, x3


@njit(cache=True)
def _weld_mass(bp, a, b, rax, ray, rbx, rby):
    ma = bp[a, INV_MASS]
    ia = bp[a, INV_INERTIA]
    mb = bp[b, INV_MASS]
    ib = bp[b, INV_INERTIA]
    k11 = ma + mb + ray * ray * ia + rby * rby * ib
    k12 = -ray * rax * ia - rby * rbx * ib
    k13 = -ray * ia - rby * ib
    k22 = ma + mb + rax * rax * ia + rbx * rbx * ib
    k23 = rax * ia + rbx * ib
    k33 = ia + ib
    return k11, k12, k13, k22, k23, k33


@njit(cache=True)
def _prepare_welds(bs, bp, wi, wf, wk):
    for j in range(wi.shape[0]):
        a = wi[j, 0]
        b = wi[j, 1]
        rax, ray, rbx, rby = _weld_arms(bs, wf, a, b, j)
        wk[j, 0] = rax
        wk[j, 1] = ray
        wk[j, 2] = rbx
        wk[j, 3] = rby
        k11, k12, k13, k22, k23, k33 = _weld_mass(bp, a, b, rax, ray, rbx, rby)
        wk[j, 4] = k11
        wk[j, 5] = k12
        wk[j, 6] = k13
        wk[j, 7] = k22
        wk[j, 8] = k23
        wk[j, 9] = k33
        # warm start
        px = wf[j, J_PX]
        py = wf[j, J_PY]
        pz = wf[j, J_PZ]
        bs[a, VX] -= bp[a, INV_MASS] * px
        bs[a, VY] -= bp[a, INV_MASS] * py
        bs[a, W] -= bp[a, INV_INERTIA] * (rax * py - ray * px + pz)
        bs[b, VX] += bp[b, INV_MASS] * px
        bs[b, VY] += bp[b, INV_MASS] * py
        bs[b, W] += bp[b, INV_INERTIA] * (rbx * py - rby * px + pz)


@njit(cache=True)
def _solve_welds(bs, bp, wi, wf, wk):
    for j in range(wi.shape[0]):
        a = wi[j, 0]
        b = wi[j, 1]
        rax = wk[j, 0]
        ray = wk[j, 1]
        rbx = wk[j, 2]
        rby = wk[j, 3]
        wa = bs[a, W]
        wb = bs[b, W]
        c1x = bs[b, VX] - wb * rby - bs[a, VX] + wa * ray
        c1y = bs[b, VY] + wb * rbx - bs[a, VY] - wa * rax
        c2 = wb - wa
        ix, iy, iz = _solve33(wk[j, 4], wk[j, 5], wk[j, 6], wk[j, 7], wk[j, 8], wk[j, 9],
                              -c1x, -c1y, -c2)
        wf[j, J_PX] += ix
        wf[j, J_PY] += iy
        wf[j, J_PZ] += iz
        bs[a, VX] -= bp[a, INV_MASS] * ix
        bs[a, VY] -= bp[a, INV_MASS] * iy
        bs[a, W] -= bp[a, INV_INERTIA] * (rax * iy - ray * ix + iz)
        bs[b, VX] += bp[b, INV_MASS] * ix
        bs[b, VY] += bp[b, INV_MASS] * iy
        bs[b, W] += bp[b, INV_INERTIA] * (rbx * iy - rby * ix + iz)


@njit(cache=True)
def _weld_residuals(bs, wi, wk):
    # relative anchor speed right after the velocity solve
    for j in range(wi.shape[0]):
        a = wi[j, 0]
        b = wi[j, 1]
        wa = bs[a, W]
        wb = bs[b, W]
        c1x = bs[b, VX] - wb * wk[j, 3] - bs[a, VX] + wa * wk[j, 1]
        c1y = bs[b, VY] + wb * wk[j, 2] - bs[a, VY] - wa * wk[j, 0]
        wk[j, 10] = math.sqrt(c1x * c1x + c1y * c1y)


@njit(cache=True)
def _position_welds(bs, bp, wi, wf, beta):
    for j in range(wi.shape[0]):
        a = wi[j, 0]
        b = wi[j, 1]
        rax, ray, rbx, rby = _weld_arms(bs, wf, a, b, j)
        c1x = bs[b, X] + rbx - bs[a, X] - rax
        c1y = bs[b, Y] + rby - bs[a, Y] - ray
        c2 = bs[b, A] - bs[a, A] - wf[j, J_REF]
        k11, k12, k13, k22, k23, k33 = _weld_mass(bp, a, b, rax, ray, rbx, rby)
        ix, iy, iz = _solve33(k11, k12, k13, k22, k23, k33,
                              -beta * c1x, -beta * c1y, -beta * c2)
        bs[a, X] -= bp[a, INV_MASS] * ix
        bs[a, Y] -= bp[a, INV_MASS] * iy
        bs[a, A] -= bp[a, INV_INERTIA] * (rax * iy - ray * ix + iz)
        bs[b, X] += bp[b, INV_MASS] * ix
        bs[b, Y] += bp[b, INV_MASS] * iy
        bs[b, A] += bp[b, INV_INERTIA] * (rbx * iy - rby * ix + iz)


@njit(cache=True)
def _prepare_ropes(bs, bp, ri, rf, rk):
    for r in range(ri.shape[0]):
        a = ri[r, 0]
        b = ri[r, 1]
        ca = math.cos(bs[a, A])
        sa = math.sin(bs[a, A])
        cb = math.cos(bs[b, A])
        sb = math.sin(bs[b, A])
        rax = ca * rf[r, R_AX] - sa * rf[r, R_AY]
        ray = sa * rf[r, R_AX] + ca * rf[r, R_AY]
        rbx = cb * rf[r, R_BX] - sb * rf[r, R_BY]
        rby = sb * rf[r, R_BX] + cb * rf[r, R_BY]
        dx = bs[b, X] + rbx - bs[a, X] - rax
        dy = bs[b, Y] + rby - bs[a, Y] - ray
        ln = math.sqrt(dx * dx + dy * dy)
        rk[r, 0] = rax
        rk[r, 1] = ray
        rk[r, 2] = rbx
        rk[r, 3] = rby
        if ln <= rf[r, R_MAX] or ln < 1e-12:
            rk[r, 6] = 0.0
            rf[r, R_ACC] = 0.0
            continue
        rf[r, R_TAUT] += 1.0
        ux = dx / ln
        uy = dy / ln
        rk[r, 4] = ux
        rk[r, 5] = uy
        cra = rax * uy - ray * ux
        crb = rbx * uy - rby * ux
        kk = (bp[a, INV_MASS] + bp[b, INV_MASS] + bp[a, INV_INERTIA] * cra * cra
              + bp[b, INV_INERTIA] * crb * crb)
        rk[r, 6] = 1.0 / kk if kk > 0.0 else 0.0
        # warm start
        p = rf[r, R_ACC]
        if p != 0.0:
            _apply_impulse(bs, bp, a, p * ux, p * uy, rax, ray, -1.0)
            _apply_impulse(bs, bp, b, p * ux, p * uy, rbx, rby, 1.0)
            rf[r, R_STEP_IMP] += p


@njit(cache=True)
def _solve_ropes(bs, bp, ri, rf, rk):
    for r in range(ri.shape[0]):
        if rk[r, 6] == 0.0:
            continue
        a = ri[r, 0]
        b = ri[r, 1]
        rax = rk[r, 0]
        ray = rk[r, 1]
        rbx = rk[r, 2]
        rby = rk[r, 3]
        ux = rk[r, 4]
        uy = rk[r, 5]
        vax, vay = _velocity_of(bs, a, rax, ray)
        vbx, vby = _velocity_of(bs, b, rbx, rby)
        cdot = (vbx - vax) * ux + (vby - vay) * uy
        lam = -rk[r, 6] * cdot
        old = rf[r, R_ACC]
        new = old + lam
        if new > 0.0:
            new = 0.0
        lam = new - old
        rf[r, R_ACC] = new
        rf[r, R_STEP_IMP] += lam
        _apply_impulse(bs, bp, a, lam * ux, lam * uy, rax, ray, -1.0)
        _apply_impulse(bs, bp, b, lam * ux, lam * uy, rbx, rby, 1.0)


@njit(cache=True)
def _position_ropes(bs, bp, ri, rf, cfg):
    beta = cfg[G_BAUMGARTE]
    slop = cfg[G_SLOP]
    max_corr = cfg[G_MAX_CORR]
    for r in range(ri.shape[0]):
        a = ri[r, 0]
        b = ri[r, 1]
        ca = math.cos(bs[a, A])
        sa = math.sin(bs[a, A])
        cb = math.cos(bs[b, A])
        sb = math.sin(bs[b, A])
        rax = ca * rf[r, R_AX] - sa * rf[r, R_AY]
        ray = sa * rf[r, R_AX] + ca * rf[r, R_AY]
        rbx = cb * rf[r, R_BX] - sb * rf[r, R_BY]
        rby = sb * rf[r, R_BX] + cb * rf[r, R_BY]
        dx = bs[b, X] + rbx - bs[a, X] - rax
        dy = bs[b, Y] + rby - bs[a, Y] - ray
        ln = math.sqrt(dx * dx + dy * dy)
        c = ln - rf[r, R_MAX]
        if c <= slop or ln < 1e-12:
            continue
        c = min(beta * (c - slop), max_corr)
        ux = dx / ln
        uy = dy / ln
        cra = rax * uy - ray * ux
        crb = rbx * uy - rby * ux
        kk = (bp[a, INV_MASS] + bp[b, INV_MASS] + bp[a, INV_INERTIA] * cra * cra
              + bp[b, INV_INERTIA] * crb * crb)
        if kk <= 0.0:
            continue
        p = c / kk
        bs[a, X] += bp[a, INV_MASS] * p * ux
        bs[a, Y] += bp[a, INV_MASS] * p * uy
        bs[a, A] += bp[a, INV_INERTIA] * p * cra
        bs[b, X] -= bp[b, INV_MASS] * p * ux
        bs[b, Y] -= bp[b, INV_MASS] * p * uy
        bs[b, A] -= bp[b, INV_INERTIA] * p * crb


@njit(cache=True)
def _spring_forces(bs, bg, si, sf, acc, warn):
    for s in range(si.shape[0]):
        k = sf[s, S_K]
        c = sf[s, S_C]
        if k == 0.0 and c == 0.0:
            continue
        a = si[s, 0]
        b = si[s, 1]
        ca = math.cos(bs[a, A])
        sa = math.sin(bs[a, A])
        cb = math.cos(bs[b, A])
        sb = math.sin(bs[b, A])
        rax = ca * sf[s, S_AX] - sa * sf[s, S_AY]
        ray = sa * sf[s, S_AX] + ca * sf[s, S_AY]
        rbx = cb * sf[s, S_BX] - sb * sf[s, S_BY]
        rby = sb * sf[s, S_BX] + cb * sf[s, S_BY]
        dx = bs[b, X] + rbx - bs[a, X] - rax
        dy = bs[b, Y] + rby - bs[a, Y] - ray
        ln = math.sqrt(dx * dx + dy * dy)
        if ln < 1e-9:
            warn[WARN_SPRING_DEGENERATE] += 1
            continue
        ux = dx / ln
        uy = dy / ln
        vax = bs[a, VX] - bs[a, W] * ray
        vay = bs[a, VY] + bs[a, W] * rax
        vbx = bs[b, VX] - bs[b, W] * rby
        vby = bs[b, VY] + bs[b, W] * rbx
        vrel = (vbx - vax) * ux + (vby - vay) * uy
        f = k * (ln - sf[s, S_REST]) + c * vrel
        fx = f * ux
        fy = f * uy
        acc[a, 0] += fx
        acc[a, 1] += fy
        acc[a, 2] += rax * fy - ray * fx
        acc[b, 0] -= fx
        acc[b, 1] -= fy
        acc[b, 2] -= rbx * fy - rby * fx


@njit(cache=True)
def _substep(h, bs, bp, bg, bf, si, sf, ri, rf, wi, wf, tp, cfg, icfg,
             cint, cflt, pint, pflt, counts, touching, warn, acc, wk, rk):
    nb = bs.shape[0]
    for i in range(nb):
        acc[i, 0] = bf[i, 0]
        acc[i, 1] = bf[i, 1]
        acc[i, 2] = bf[i, 2]
    _spring_forces(bs, bg, si, sf, acc, warn)
    gx = cfg[G_GX]
    gy = cfg[G_GY]
    for i in range(nb):
        if bg[i, KINEMATIC] != 0:
            continue
        im = bp[i, INV_MASS]
        bs[i, VX] += h * (gx + im * acc[i, 0])
        bs[i, VY] += h * (gy + im * acc[i, 1])
        bs[i, W] += h * bp[i, INV_INERTIA] * acc[i, 2]
        lin = 1.0 / (1.0 + h * bp[i, LIN_DAMP])
        ang = 1.0 / (1.0 + h * bp[i, ANG_DAMP])
        bs[i, VX] *= lin
        bs[i, VY] *= lin
        bs[i, W] *= ang

    n = _detect(bs, bp, bg, tp, cfg, icfg, cint, cflt, touching, warn)
    _warm_match(cint, cflt, n, pint, pflt, counts[1])
    _prepare_contacts(bs, bp, cfg, cint, cflt, n)
    _warm_start_contacts(bs, bp, cint, cflt, n)
    _prepare_welds(bs, bp, wi, wf, wk)
    _prepare_ropes(bs, bp, ri, rf, rk)
    # welds last: they are equality constraints and should hold exactly after the solve
    for _ in range(icfg[I_VEL_IT]):
        _solve_contacts(bs, bp, cint, cflt, n)
        _solve_ropes(bs, bp, ri, rf, rk)
        _solve_welds(bs, bp, wi, wf, wk)
    _weld_residuals(bs, wi, wk)

    for i in range(nb):
        bs[i, X] += h * bs[i, VX]
        bs[i, Y] += h * bs[i, VY]
        bs[i, A] += h * bs[i, W]

    beta = cfg[G_BAUMGARTE]
    for _ in range(icfg[I_POS_IT]):
        _position_welds(bs, bp, wi, wf, beta)
        _position_ropes(bs, bp, ri, rf, cfg)
        _position_contacts(bs, bp, cfg, cint, cflt, n)

    # keep this substep's contacts for warm starting the next one
    for k in range(n):
        for col in range(3):
            pint[k, col] = cint[k, col]
        for col in range(N_CONTACT_COLS):
            pflt[k, col] = cflt[k, col]
    counts[0] = n
    counts[1] = n

    for i in range(nb):
        for col in range(6):
            if not math.isfinite(bs[i, col]):
                return i
    return -1


@njit(cache=True)
def advance(n_steps, bs, bp, bg, bf, si, sf, ri, rf, wi, wf, tp, cfg, icfg,
            cint, cflt, pint, pflt, counts, touching, warn, acc, wk, rk):
    """Advance ``n_steps`` full time steps; returns the index of the first
    non-finite body (or -1) and the number of steps completed."""
    nsub = icfg[I_SUBSTEPS]
    h = cfg[G_DT] / nsub
    for step in range(n_steps):
        touching[:] = 0
        for r in range(ri.shape[0]):
            rf[r, R_STEP_IMP] = 0.0
            rf[r, R_TAUT] = 0.0
        for _ in range(nsub):
            bad = _substep(h, bs, bp, bg, bf, si, sf, ri, rf, wi, wf, tp, cfg, icfg,
                           cint, cflt, pint, pflt, counts, touching, warn, acc, wk, rk)
            if bad >= 0:
                return bad, step
        bf[:, :] = 0.0
    return -1, n_steps
