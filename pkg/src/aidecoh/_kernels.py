"""Numba kernels for bath sampling and multipole sums.

All kernels release the GIL. Per-sample results depend only on
(seed, sample index), never on how samples are spread over threads.
"""
from __future__ import annotations

import math

import numba
import numpy as np

from .rng import (TAG_POS, TAG_STRIDE, TAG_VEL, TWO_M32, philox, sincos_turn, u32, u53)

_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)

SELECT_DISTANT = 0
SELECT_OUTSIDE = 1
SELECT_ALL = 2

# output slots of the moment kernels
N_MOMENTS = 17
GRAD = slice(0, 3)
HESS = slice(3, 9)       # xx, yy, zz, xy, xz, yz
HDOT = slice(9, 15)      # same ordering
HDOT_ZZ = 15             # explicit zz time-derivative formula
N_SELECTED = 16

CHUNK = 2048

_jit = dict(nogil=True, cache=True)
_fast = dict(nogil=True, cache=True, fastmath=True, error_model="numpy")


@numba.njit(inline="always", **_fast)
def _unit_position(a, b, c, d):
    """Cube-radius fraction f in (0,1) and unit direction from one Philox block."""
    f = u53(a, b)
    ct = u32(c) * 2.0 - 1.0
    st = math.sqrt(max(0.0, 1.0 - ct * ct))
    sp, cp = sincos_turn(u32(d) - 0.5)
    return f, st * cp, st * sp, ct


@numba.njit(inline="always", **_fast)
def _normals(a, b, c, d):
    r1 = math.sqrt(-2.0 * math.log(u32(a)))
    s1, c1 = sincos_turn(u32(b) - 0.5)
    r2 = math.sqrt(-2.0 * math.log(u32(c)))
    s2, c2 = sincos_turn(u32(d) - 0.5)
    return r1 * c1, r1 * s1, r2 * c2


@numba.njit(inline="always", **_fast)
def _draw_particle(j, lo, hi, k0, k1, r_max, v_beta, sing2):
    """Position and velocity of particle j; returns redraw count as the last item."""
    att = 0
    while True:
        tag = np.uint64(TAG_POS + TAG_STRIDE * att)
        a, b, c, d = philox(np.uint64(j), lo, hi, tag, k0, k1)
        f, nx, ny, nz = _unit_position(a, b, c, d)
        r = r_max * np.cbrt(f)
        x = r * nx
        y = r * ny
        z = r * nz
        if x * x + y * y + z * z >= sing2:
            break
        att += 1
    if v_beta > 0.0:
        a, b, c, d = philox(np.uint64(j), lo, hi, np.uint64(TAG_VEL), k0, k1)
        g0, g1, g2 = _normals(a, b, c, d)
        vx = v_beta * g0
        vy = v_beta * g1
        vz = v_beta * g2
    else:
        vx = 0.0
        vy = 0.0
        vz = 0.0
    return x, y, z, vx, vy, vz, att


@numba.njit(**_jit)
def fill_particles(idx, n, k0, k1, r_max, v_beta, r_min, pos, vel):
    lo = np.uint64(idx) & _MASK
    hi = np.uint64(idx) >> _S32
    sing2 = (1e-9 * r_min) ** 2
    redraws = 0
    for j in range(n):
        x, y, z, vx, vy, vz, att = _draw_particle(j, lo, hi, k0, k1, r_max, v_beta, sing2)
        pos[j, 0] = x
        pos[j, 1] = y
        pos[j, 2] = z
        vel[j, 0] = vx
        vel[j, 1] = vy
        vel[j, 2] = vz
        redraws += att
    return redraws


@numba.njit(inline="always", **_fast)
def _is_selected(x, y, z, vx, vy, vz, r_min, tau, mode):
    if mode == SELECT_ALL:
        return True
    r2 = x * x + y * y + z * z
    if mode == SELECT_OUTSIDE:
        return r2 >= r_min * r_min
    vv = vx * vx + vy * vy + vz * vz
    t = 0.0
    if vv > 0.0:
        t = -(x * vx + y * vy + z * vz) / vv
        t = min(max(t, 0.0), 2.0 * tau)
    px = x + vx * t
    py = y + vy * t
    pz = z + vz * t
    return px * px + py * py + pz * pz >= r_min * r_min


@numba.njit(**_jit)
def selection_mask(pos, vel, r_min, tau, mode, out):
    for j in range(pos.shape[0]):
        out[j] = _is_selected(pos[j, 0], pos[j, 1], pos[j, 2],
                              vel[j, 0], vel[j, 1], vel[j, 2], r_min, tau, mode)


@numba.njit(inline="always", **_fast)
def _accumulate(x, y, z, vx, vy, vz, out):
    r2 = x * x + y * y + z * z
    ir2 = 1.0 / r2
    ir3 = ir2 / math.sqrt(r2)
    ir5 = ir3 * ir2
    ir7 = ir5 * ir2
    rv = x * vx + y * vy + z * vz
    out[0] += x * ir3
    out[1] += y * ir3
    out[2] += z * ir3
    qxx = 3.0 * x * x - r2
    qyy = 3.0 * y * y - r2
    qzz = 3.0 * z * z - r2
    qxy = 3.0 * x * y
    qxz = 3.0 * x * z
    qyz = 3.0 * y * z
    out[3] += qxx * ir5
    out[4] += qyy * ir5
    out[5] += qzz * ir5
    out[6] += qxy * ir5
    out[7] += qxz * ir5
    out[8] += qyz * ir5
    c5 = 5.0 * rv * ir7
    d2 = 2.0 * rv
    out[9] += (6.0 * vx * x - d2) * ir5 - qxx * c5
    out[10] += (6.0 * vy * y - d2) * ir5 - qyy * c5
    out[11] += (6.0 * vz * z - d2) * ir5 - qzz * c5
    out[12] += 3.0 * (vx * y + x * vy) * ir5 - qxy * c5
    out[13] += 3.0 * (vx * z + x * vz) * ir5 - qxz * c5
    out[14] += 3.0 * (vy * z + y * vz) * ir5 - qyz * c5
    out[HDOT_ZZ] += 3.0 * (r2 - 5.0 * z * z) * rv * ir7 + 6.0 * z * vz * ir5
    out[N_SELECTED] += 1.0


@numba.njit(**_jit)
def multipole_sums(pos, vel, mask, guard, out):
    """Unit-mass sums over selected particles. Returns index of a singular particle or -1."""
    g2 = guard * guard
    for j in range(pos.shape[0]):
        if not mask[j]:
            continue
        x = pos[j, 0]
        y = pos[j, 1]
        z = pos[j, 2]
        if x * x + y * y + z * z < g2:
            return j
        _accumulate(x, y, z, vel[j, 0], vel[j, 1], vel[j, 2], out)
    return -1


@numba.njit(**_fast)
def moments_batch(s0, counts, k0, k1, r_max, v_beta, r_min, tau, mode, out):
    """Generic per-sample moments for samples s0 .. s0 + len(counts) - 1."""
    sing2 = (1e-9 * r_min) ** 2
    acc = np.zeros(N_MOMENTS)
    for s in range(counts.shape[0]):
        idx = np.uint64(s0 + s)
        lo = idx & _MASK
        hi = idx >> _S32
        acc[:] = 0.0
        for j in range(counts[s]):
            x, y, z, vx, vy, vz, att = _draw_particle(j, lo, hi, k0, k1, r_max, v_beta, sing2)
            if _is_selected(x, y, z, vx, vy, vz, r_min, tau, mode):
                _accumulate(x, y, z, vx, vy, vz, acc)
        out[s, :] = acc


@numba.njit(**_jit)
def _fill_words(start, m, lo, hi, k0, k1, w):
    # stored as sign-flipped int32 so the conversion to double vectorizes
    for j in range(m):
        a, b, c, d = philox(np.uint64(start + j), lo, hi, np.uint64(TAG_POS), k0, k1)
        w[0, j] = np.int32(np.int64(a) - 2147483648)
        w[1, j] = np.int32(np.int64(b >> _S11))
        w[2, j] = np.int32(np.int64(c) - 2147483648)
        w[3, j] = np.int32(np.int64(d) - 2147483648)


@numba.njit(**_fast)
def _static_chunk(m, fmin, fsing, w, acc):
    hxx = 0.0
    hyy = 0.0
    hzz = 0.0
    hxy = 0.0
    hxz = 0.0
    hyz = 0.0
    nsel = 0.0
    nsing = 0.0
    for j in range(m):
        f = (np.float64(w[0, j]) + 2147483648.0) * TWO_M32 \
            + (np.float64(w[1, j]) + 0.5) * (TWO_M32 * 2.0 ** -21)
        ct = (np.float64(w[2, j]) + 0.5) * (2.0 * TWO_M32)
        v = (np.float64(w[3, j]) + 0.5) * TWO_M32
        sp, cp = sincos_turn(v)
        st = math.sqrt(max(0.0, 1.0 - ct * ct))
        nx = st * cp
        ny = st * sp
        inv = 1.0 / f if f >= fmin else 0.0
        t = 3.0 * inv
        hxx += t * nx * nx - inv
        hyy += t * ny * ny - inv
        hzz += t * ct * ct - inv
        hxy += t * nx * ny
        hxz += t * nx * ct
        hyz += t * ny * ct
        nsel += 1.0 if f >= fmin else 0.0
        nsing += 1.0 if f < fsing else 0.0
    acc[0] += hxx
    acc[1] += hyy
    acc[2] += hzz
    acc[3] += hxy
    acc[4] += hxz
    acc[5] += hyz
    acc[6] += nsel
    acc[7] += nsing


@numba.njit(**_jit)
def static_hess_batch(s0, counts, k0, k1, fmin, fsing, out):
    """Zero-temperature Hessian sums in units of 1/r_max^3.

    out[s] = (xx, yy, zz, xy, xz, yz, n_selected, n_singular).
    """
    w = np.empty((4, CHUNK), np.int32)
    acc = np.zeros(8)
    for s in range(counts.shape[0]):
        idx = np.uint64(s0 + s)
        lo = idx & _MASK
        hi = idx >> _S32
        acc[:] = 0.0
        n = counts[s]
        for start in range(0, n, CHUNK):
            m = min(CHUNK, n - start)
            _fill_words(start, m, lo, hi, k0, k1, w)
            _static_chunk(m, fmin, fsing, w, acc)
        out[s, :] = acc
