"""Bath sampling, the distant / collision-cone partition and multipole sums.

The bath is a Boltzmann gas of point masses. A realisation lives in a ball
of radius r_max around the experiment; particle counts are Poisson with
mean n0 * (4 pi / 3) r_max^3. Particles whose straight-line path comes within
r_min of the origin during [0, 2 tau] form the collision cone; the rest are
the distant sector and act through the multipole expansion at the origin.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _kernels as K
from .regime import RegimeWarning, SingularityError
from .rng import ALGORITHM, count_uniforms, seed_key
from .units import PhysicalConstants

log = logging.getLogger(__name__)

DEFAULT_RMAX_FACTOR = 20.0
SINGULAR_GUARD = 1e-9  # in units of r_min

_SELECT = {"distant": K.SELECT_DISTANT, "outside": K.SELECT_OUTSIDE, "all": K.SELECT_ALL}


@dataclass(frozen=True)
class BathSpec:
    """Gas of point masses around the experiment.

    m_b [kg], n0 [1/m^3], v_beta = sqrt(k_B T / m_b) [m/s], r_min [m] cutoff,
    r_max [m] sampling radius (defaults to 20 r_min). n0 = 0 is allowed and
    describes an empty bath.
    """

    m_b: float
    n0: float
    v_beta: float = 0.0
    r_min: float = 1.0
    r_max: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.m_b) and self.m_b > 0):
            raise ValueError(f"m_b must be > 0, got {self.m_b!r}")
        if not (math.isfinite(self.n0) and self.n0 >= 0):
            raise ValueError(f"n0 must be >= 0, got {self.n0!r}")
        if not (math.isfinite(self.v_beta) and self.v_beta >= 0):
            raise ValueError(f"v_beta must be >= 0, got {self.v_beta!r}")
        if not (math.isfinite(self.r_min) and self.r_min > 0):
            raise ValueError(f"r_min must be > 0, got {self.r_min!r}")
        if self.r_max is None:
            object.__setattr__(self, "r_max", DEFAULT_RMAX_FACTOR * self.r_min)
        if not (math.isfinite(self.r_max) and self.r_max > self.r_min):
            raise ValueError(f"r_max must exceed r_min, got {self.r_max!r}")

    @classmethod
    def from_temperature(cls, m_b, n0, T, r_min, r_max=None, k_B=1.380649e-23):
        return cls(m_b=m_b, n0=n0, v_beta=math.sqrt(k_B * T / m_b), r_min=r_min, r_max=r_max)

    @property
    def mean_count(self) -> float:
        return self.n0 * 4.0 * math.pi / 3.0 * self.r_max ** 3

    @property
    def occupancy(self) -> float:
        """n0 r_min^3; the Gaussian treatment needs this to be large."""
        return self.n0 * self.r_min ** 3

    def gaussianity_flag(self, threshold: float = 10.0) -> str | None:
        if 0 < self.occupancy < threshold:
            warnings.warn(RegimeWarning(
                "low_occupancy", f"n0 r_min^3 = {self.occupancy:.3g}; tidal statistics "
                "are visibly non-Gaussian"), stacklevel=2)
            return "low_occupancy"
        return None


@dataclass(frozen=True)
class BathParticle:
    position: tuple[float, float, float]
    velocity: tuple[float, float, float]


@dataclass
class BathSample:
    """One bath realisation. Arrays are (n, 3); index sets partition range(n)."""

    positions: np.ndarray
    velocities: np.ndarray
    seed: int
    index: int
    distant: np.ndarray
    collision_cone: np.ndarray
    redraws: int = 0
    rng_algorithm: str = ALGORITHM

    @property
    def particles(self) -> list[BathParticle]:
        return [BathParticle(tuple(p), tuple(v)) for p, v in zip(self.positions, self.velocities)]

    def __len__(self):
        return self.positions.shape[0]


@dataclass(frozen=True)
class MultipoleCoefficients:
    """Gradient [kg/m^2], Hessian [kg/m^3] and optional Hessian rate of m_b sum 1/|r_b|."""

    grad: np.ndarray
    hess: np.ndarray
    hess_dot: np.ndarray | None = None
    n_terms: int = field(default=0, compare=False)

    def __post_init__(self):
        g = np.array(self.grad, dtype=float).reshape(3)
        h = np.array(self.hess, dtype=float).reshape(3, 3)
        if not np.array_equal(h, h.T):
            raise ValueError("hess must be symmetric")
        object.__setattr__(self, "grad", g)
        object.__setattr__(self, "hess", h)
        if self.hess_dot is not None:
            hd = np.array(self.hess_dot, dtype=float).reshape(3, 3)
            if not np.array_equal(hd, hd.T):
                raise ValueError("hess_dot must be symmetric")
            object.__setattr__(self, "hess_dot", hd)

    @classmethod
    def zero(cls) -> "MultipoleCoefficients":
        return cls(np.zeros(3), np.zeros((3, 3)), np.zeros((3, 3)))

    @classmethod
    def from_hess_zj(cls, zx=0.0, zy=0.0, zz=0.0) -> "MultipoleCoefficients":
        """Hessian with only the z row/column set (other entries keep it traceless)."""
        h = np.zeros((3, 3))
        h[2, 0] = h[0, 2] = zx
        h[2, 1] = h[1, 2] = zy
        h[2, 2] = zz
        return cls(np.zeros(3), h)

    def trace_residual(self) -> float:
        """|trace| relative to the Frobenius norm of the Hessian."""
        norm = float(np.linalg.norm(self.hess))
        return 0.0 if norm == 0 else abs(float(np.trace(self.hess))) / norm


def _sym(v6) -> np.ndarray:
    xx, yy, zz, xy, xz, yz = v6
    return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]], dtype=float)


def poisson_counts(spec: BathSpec, seed: int, start: int, n: int) -> np.ndarray:
    """Particle counts for samples start .. start+n-1 (inverse-CDF of counter uniforms)."""
    lam = spec.mean_count
    if lam == 0:
        return np.zeros(n, dtype=np.int64)
    u = count_uniforms(seed, start, n)
    return stats.poisson.ppf(u, lam).astype(np.int64)


def sample_bath(spec: BathSpec, tau: float, seed: int, index: int = 0) -> BathSample:
    """Draw bath realisation ``index`` of the stream keyed by ``seed``."""
    if not tau > 0:
        raise ValueError("tau must be > 0")
    k0, k1 = seed_key(seed)
    n = int(poisson_counts(spec, seed, index, 1)[0])
    pos = np.empty((n, 3))
    vel = np.empty((n, 3))
    redraws = K.fill_particles(np.int64(index), n, k0, k1, float(spec.r_max),
                               float(spec.v_beta), float(spec.r_min), pos, vel)
    if redraws:
        log.info("sample %d: redrew %d near-singular particle positions", index, redraws)
    mask = np.empty(n, dtype=np.bool_)
    K.selection_mask(pos, vel, float(spec.r_min), float(tau), K.SELECT_DISTANT, mask)
    idx = np.arange(n)
    return BathSample(pos, vel, int(seed), int(index), idx[mask], idx[~mask], int(redraws))


def partition(positions, velocities, r_min: float, tau: float) -> np.ndarray:
    """Boolean mask of distant-sector particles (closest approach over [0, 2 tau] >= r_min)."""
    pos = np.ascontiguousarray(positions, dtype=float).reshape(-1, 3)
    vel = np.ascontiguousarray(velocities, dtype=float).reshape(-1, 3)
    mask = np.empty(pos.shape[0], dtype=np.bool_)
    K.selection_mask(pos, vel, float(r_min), float(tau), K.SELECT_DISTANT, mask)
    return mask


def _sums(positions, velocities, selected, r_min):
    pos = np.ascontiguousarray(positions, dtype=float).reshape(-1, 3)
    vel = np.ascontiguousarray(velocities, dtype=float).reshape(-1, 3)
    mask = np.zeros(pos.shape[0], dtype=np.bool_)
    mask[selected] = True
    out = np.zeros(K.N_MOMENTS)
    bad = K.multipole_sums(pos, vel, mask, SINGULAR_GUARD * r_min, out)
    if bad >= 0:
        raise SingularityError(f"particle {bad} lies within {SINGULAR_GUARD:g} r_min of the origin")
    return out


def _select(sample: BathSample, spec: BathSpec, sector) -> np.ndarray:
    if sector is True or sector == "distant":
        return sample.distant
    if sector is False or sector == "all":
        return np.arange(len(sample))
    if sector == "outside":
        r = np.linalg.norm(sample.positions, axis=1)
        return np.nonzero(r >= spec.r_min)[0]
    raise ValueError(f"unknown sector {sector!r}")


def multipole_at_origin(sample: BathSample, spec: BathSpec, restrict_to_distant=True,
                        with_time_derivative: bool = True) -> MultipoleCoefficients:
    """Exact gradient and Hessian (and rate) of m_b sum 1/|r_b| at the origin.

    ``restrict_to_distant`` may also be one of "distant", "outside", "all";
    "outside" keeps every particle that starts beyond r_min.
    """
    sel = _select(sample, spec, restrict_to_distant)
    raw = _sums(sample.positions, sample.velocities, sel, spec.r_min)
    out = raw * spec.m_b
    return MultipoleCoefficients(
        grad=out[K.GRAD], hess=_sym(out[K.HESS]),
        hess_dot=_sym(out[K.HDOT]) if with_time_derivative else None,
        n_terms=int(raw[K.N_SELECTED]))


def multipole_from_particles(positions, velocities, m_b: float, r_min: float = 1.0,
                             ) -> MultipoleCoefficients:
    """Multipole sums for an explicit particle list (all particles included)."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 3)
    out = _sums(pos, velocities, np.arange(pos.shape[0]), r_min) * m_b
    return MultipoleCoefficients(out[K.GRAD], _sym(out[K.HESS]), _sym(out[K.HDOT]),
                                 n_terms=pos.shape[0])


def time_derivative_hess_zz(sample: BathSample, spec: BathSpec, restrict_to_distant=True) -> float:
    """m_b sum [3 (r^2 - 5 z^2)(r.v)/r^7 + 6 z v_z / r^5] over the selected particles."""
    sel = _select(sample, spec, restrict_to_distant)
    return float(_sums(sample.positions, sample.velocities, sel, spec.r_min)[K.HDOT_ZZ] * spec.m_b)


def xi_squared(spec: BathSpec, constants: PhysicalConstants) -> float:
    """Tidal fluctuation scale (G m_b)^2 n0 / r_min^3 [1/s^4]."""
    return (constants.G * spec.m_b) ** 2 * spec.n0 / spec.r_min ** 3


_AXES = {"x": 0, "y": 1, "z": 2, 0: 0, 1: 1, 2: 2}


def hess_variance(spec: BathSpec, constants: PhysicalConstants, i="z", j="z") -> float:
    """Variance of one component G Phi^i_j: (4 pi/3)((3 + delta_ij)/5) xi^2."""
    try:
        a, b = _AXES[i], _AXES[j]
    except KeyError:
        raise ValueError(f"bad axis pair ({i!r}, {j!r})") from None
    delta = 1.0 if a == b else 0.0
    return 4.0 * math.pi / 3.0 * (3.0 + delta) / 5.0 * xi_squared(spec, constants)


def hess_dot_variance(spec: BathSpec, constants: PhysicalConstants) -> float:
    """Variance of G d/dt Phi^z_z at t = 0: (48 pi/5) xi^2 v_beta^2 / r_min^2."""
    return 48.0 * math.pi / 5.0 * xi_squared(spec, constants) * spec.v_beta ** 2 / spec.r_min ** 2


def write_bath_dump(path_or_file, samples, delimiter: str = ","):
    """One row per particle: seed, index, x, y, z, vx, vy, vz, sector."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["seed", "index", "x", "y", "z", "vx", "vy", "vz", "sector"])
        for s in samples:
            sector = np.full(len(s), "collision_cone", dtype=object)
            sector[s.distant] = "distant"
            for p, v, sec in zip(s.positions, s.velocities, sector):
                w.writerow([s.seed, s.index, *(repr(float(x)) for x in p),
                            *(repr(float(x)) for x in v), sec])
    finally:
        if own:
            fh.close()
