"""Counter-based random numbers (Philox4x32-10).

Every draw is a pure function of (seed, counter), so any partition of the
work across threads reproduces the same stream. Counter layout:

    (particle index, sample index low word, sample index high word, tag)

with the 64-bit seed split into the two key words. The tag selects the
quantity being drawn; redraw attempts add multiples of ``TAG_STRIDE``.
"""
from __future__ import annotations

import math

import numba
import numpy as np

ALGORITHM = "philox4x32-10"

TAG_POS = 0
TAG_VEL = 1
TAG_COUNT = 2
TAG_STRIDE = 4

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_S21 = np.uint64(21)

TWO_M32 = 1.0 / 4294967296.0
TWO_M53 = 1.0 / 9007199254740992.0


@numba.njit(inline="always", cache=True)
def philox(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = ((p1 >> _S32) ^ c1 ^ k0, p1 & _MASK,
                          (p0 >> _S32) ^ c3 ^ k1, p0 & _MASK)
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


@numba.njit(inline="always", cache=True)
def u53(a, b):
    """Uniform in (0, 1) with 53 random bits from two words."""
    return (np.float64(np.int64((a << _S21) | (b >> _S11))) + 0.5) * TWO_M53


@numba.njit(inline="always", cache=True)
def u32(a):
    """Uniform in (0, 1) from one word."""
    return (np.float64(np.int64(a)) + 0.5) * TWO_M32


@numba.njit(inline="always", fastmath=True, cache=True)
def sincos_turn(v):
    """(sin 2 pi v, cos 2 pi v) for v in [-1/2, 1/2], polynomial, ~1e-16 abs error."""
    h = v * (math.pi / 2.0)
    h2 = h * h
    s = h * (1.0 + h2 * (-1.0 / 6 + h2 * (1.0 / 120 + h2 * (-1.0 / 5040 + h2 * (
        1.0 / 362880 + h2 * (-1.0 / 39916800 + h2 * (1.0 / 6227020800
                                                      + h2 * (-1.0 / 1307674368000))))))))
    c = 1.0 + h2 * (-0.5 + h2 * (1.0 / 24 + h2 * (-1.0 / 720 + h2 * (1.0 / 40320 + h2 * (
        -1.0 / 3628800 + h2 * (1.0 / 479001600 + h2 * (-1.0 / 87178291200
                                                      + h2 * (1.0 / 20922789888000))))))))
    # two angle doublings take pi v / 2 up to 2 pi v
    s2 = 2.0 * s * c
    c2 = 1.0 - 2.0 * s * s
    return 2.0 * s2 * c2, 1.0 - 2.0 * s2 * s2


def seed_key(seed: int) -> tuple[np.uint64, np.uint64]:
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32)


def split_index(idx: int) -> tuple[np.uint64, np.uint64]:
    idx = int(idx)
    if not 0 <= idx < 2 ** 64:
        raise ValueError("sample index out of range")
    return np.uint64(idx & 0xFFFFFFFF), np.uint64(idx >> 32)


@numba.njit(cache=True)
def _block(c0, c1, c2, c3, k0, k1):
    return philox(c0, c1, c2, c3, k0, k1)


def philox_block(counter, key) -> tuple[int, int, int, int]:
    """One raw Philox4x32-10 block, for known-answer tests."""
    c = [np.uint64(int(x) & 0xFFFFFFFF) for x in counter]
    k = [np.uint64(int(x) & 0xFFFFFFFF) for x in key]
    return tuple(int(x) for x in _block(c[0], c[1], c[2], c[3], k[0], k[1]))


@numba.njit(cache=True)
def _count_uniforms(start, n, k0, k1, out):
    for i in range(n):
        idx = np.uint64(start + i)
        a, b, c, d = philox(np.uint64(0), idx & _MASK, idx >> _S32, np.uint64(TAG_COUNT), k0, k1)
        out[i] = u53(a, b)


def count_uniforms(seed: int, start: int, n: int) -> np.ndarray:
    """Uniforms that drive the per-sample Poisson particle counts."""
    k0, k1 = seed_key(seed)
    out = np.empty(n)
    _count_uniforms(np.int64(start), np.int64(n), k0, k1, out)
    return out
