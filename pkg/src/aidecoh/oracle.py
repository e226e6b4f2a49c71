"""Brute-force validators for the closed forms.

Two independent oracles live here:

* bath ensembles: exact multipole sums over sampled realisations, fed
  through the per-configuration overlap and averaged;
* trajectory integration: laser and both atom arms pushed through the
  exact 1/r^2 force of a straight-line bath particle with a fourth-order
  symplectic scheme, then read out with the three-point phase stencil.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import integrate

from . import _kernels as K
from .bath import BathSpec, poisson_counts
from .distant import gaussian_overlaps
from .flyby import FlybySpec
from .interferometer import free_population
from .parallel import map_indexed
from .rng import seed_key
from .units import ExperimentSpec, PhysicalConstants, effective_dipole

SAMPLE_CHUNK = 64

# column layout of sample_moments (same as the kernels)
GRAD, HESS, HDOT, HDOT_ZZ, N_SELECTED = K.GRAD, K.HESS, K.HDOT, K.HDOT_ZZ, K.N_SELECTED
HXX, HYY, HZZ, HXY, HXZ, HYZ = range(3, 9)


class AccuracyError(ArithmeticError):
    """Step-halving or quadrature error estimate exceeds the requested tolerance."""


# ---------------------------------------------------------------------------
# bath ensembles


def sample_moments(bath: BathSpec, tau: float, n_samples: int, seed: int,
                   sector: str = "distant", workers: int | None = None,
                   start: int = 0) -> np.ndarray:
    """Per-sample multipole sums (rows ordered by sample index).

    Columns follow ``_kernels``: grad (3), hess (6: xx yy zz xy xz yz),
    hess_dot (6), explicit zz rate, selected count. Values include m_b.
    For a cold bath the gradient is not accumulated and is reported as NaN.
    """
    mode = {"distant": K.SELECT_DISTANT, "outside": K.SELECT_OUTSIDE, "all": K.SELECT_ALL}[sector]
    k0, k1 = seed_key(seed)
    r_min, r_max = float(bath.r_min), float(bath.r_max)
    static = bath.v_beta == 0.0 and mode != K.SELECT_ALL
    fmin = (r_min / r_max) ** 3
    fsing = (1e-9 * r_min / r_max) ** 3

    def run(a, b):
        counts = poisson_counts(bath, seed, start + a, b - a)
        out = np.zeros((b - a, K.N_MOMENTS))
        if static:
            raw = np.zeros((b - a, 8))
            K.static_hess_batch(np.int64(start + a), counts, k0, k1, fmin, fsing, raw)
            out[:, HESS] = raw[:, :6] / r_max ** 3
            out[:, GRAD] = np.nan
            out[:, N_SELECTED] = raw[:, 6]
            for i in np.nonzero(raw[:, 7] > 0)[0]:
                # near-singular draw: recompute the sample with the redraw logic
                row = np.zeros((1, K.N_MOMENTS))
                K.moments_batch(np.int64(start + a + i), counts[i:i + 1], k0, k1, r_max, 0.0,
                                r_min, float(tau), mode, row)
                out[i] = row[0]
                out[i, GRAD] = np.nan
        else:
            K.moments_batch(np.int64(start + a), counts, k0, k1, r_max, float(bath.v_beta),
                            r_min, float(tau), mode, out)
        out[:, :N_SELECTED] *= bath.m_b
        return out

    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    return map_indexed(run, n_samples, workers, chunk=SAMPLE_CHUNK)


@dataclass(frozen=True)
class EnsembleResult:
    mean_population: float
    std_error: float
    n_samples: int
    seed: int
    theta0: float = 0.0

    @classmethod
    def from_overlaps(cls, overlaps: np.ndarray, theta0: float, seed: int) -> "EnsembleResult":
        rho = 0.5 + 0.5 * (np.exp(1j * theta0) * overlaps).real
        n = rho.size
        se = float(rho.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(rho.mean()), se, n, int(seed), float(theta0))


def ensemble_overlaps(bath: BathSpec, spec: ExperimentSpec, n_samples: int, seed: int,
                      constants: PhysicalConstants, workers: int | None = None) -> np.ndarray:
    """Per-configuration second-order overlaps over the distant sector."""
    if bath.n0 == 0:
        return np.ones(n_samples, dtype=complex)
    mom = sample_moments(bath, spec.tau, n_samples, seed, "distant", workers)
    hzz = mom[:, HZZ]
    hh = mom[:, HXZ] ** 2 + mom[:, HYZ] ** 2 + hzz ** 2
    return gaussian_overlaps(spec, hzz, hh, constants)


def ensemble_average_population(bath: BathSpec, spec: ExperimentSpec, theta0: float,
                                n_samples: int, seed: int, constants: PhysicalConstants,
                                workers: int | None = None) -> EnsembleResult:
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    ov = ensemble_overlaps(bath, spec, n_samples, seed, constants, workers)
    res = EnsembleResult.from_overlaps(ov, theta0, seed)
    if bath.n0 == 0:
        return EnsembleResult(free_population(theta0), 0.0, n_samples, int(seed), float(theta0))
    return res


@dataclass(frozen=True)
class ContrastResult:
    mean: complex
    std_error: float
    n_samples: int
    seed: int


def ensemble_time_dependent_contrast(bath: BathSpec, spec: ExperimentSpec, n_samples: int,
                                     seed: int, constants: PhysicalConstants,
                                     workers: int | None = None) -> ContrastResult:
    """Average of exp{i k G [Phi tau^2 d + dPhi/dt tau^3 (z0 + 7 hbar k tau / 12 m)]}.

    The tidal field is taken linear in time over the run; sums are over
    particles starting outside r_min.
    """
    G, hbar = constants.G, constants.hbar
    k, tau, m = spec.k, spec.tau, spec.m_a
    d = effective_dipole(spec, constants)
    d7 = spec.z0 + 7.0 / 12.0 * hbar * k * tau / m
    mom = sample_moments(bath, tau, n_samples, seed, "outside", workers)
    phase = k * G * (mom[:, HZZ] * tau ** 2 * d + mom[:, HDOT_ZZ] * tau ** 3 * d7)
    D = np.exp(1j * phase)
    mean = complex(D.mean())
    se = float(D.real.std(ddof=1) / math.sqrt(n_samples))
    return ContrastResult(mean, se, n_samples, int(seed))


# ---------------------------------------------------------------------------
# trajectory oracle

_Y1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_Y0 = -(2.0 ** (1.0 / 3.0)) * _Y1
_DRIFT = np.array([_Y1 / 2, (_Y1 + _Y0) / 2, (_Y0 + _Y1) / 2, _Y1 / 2])
_KICK = np.array([_Y1, _Y0, _Y1])


@numba.njit(inline="always", cache=True)
def _accel(x, y, z, sx, sy, sz, gm):
    dx = sx - x
    dy = sy - y
    dz = sz - z
    r2 = dx * dx + dy * dy + dz * dz
    f = gm / (r2 * math.sqrt(r2))
    return f * dx, f * dy, f * dz


@numba.njit(cache=True)
def _perturbed_bodies(free0, u1, u2, tau, rb, vb, gm, n_half, drift, kick, rec_every, track):
    """Deviation from free flight for each body under a straight-line point mass.

    Body i moves freely as free0[i] + u1[i] t before tau and picks up
    velocity u2[i] after. Returns deviations (n_bodies, 3) at tau and 2 tau.
    """
    nb = free0.shape[0]
    h = tau / n_half
    dx = np.zeros((nb, 3))
    dv = np.zeros((nb, 3))
    out = np.zeros((2, nb, 3))
    rec = 0
    for half in range(2):
        for step in range(n_half):
            t = tau * half + h * step
            for sub in range(4):
                t_sub = t
                hd = drift[sub] * h
                for i in range(nb):
                    for c in range(3):
                        dx[i, c] += hd * dv[i, c]
                t = t_sub + hd
                if sub == 3:
                    break
                hk = kick[sub] * h
                sx = rb[0] + vb[0] * t
                sy = rb[1] + vb[1] * t
                sz = rb[2] + vb[2] * t
                for i in range(nb):
                    if half == 0:
                        fx = free0[i, 0] + u1[i, 0] * t
                        fy = free0[i, 1] + u1[i, 1] * t
                        fz = free0[i, 2] + u1[i, 2] * t
                    else:
                        fx = free0[i, 0] + u1[i, 0] * tau + u2[i, 0] * (t - tau)
                        fy = free0[i, 1] + u1[i, 1] * tau + u2[i, 1] * (t - tau)
                        fz = free0[i, 2] + u1[i, 2] * tau + u2[i, 2] * (t - tau)
                    ax, ay, az = _accel(fx + dx[i, 0], fy + dx[i, 1], fz + dx[i, 2], sx, sy, sz, gm)
                    dv[i, 0] += hk * ax
                    dv[i, 1] += hk * ay
                    dv[i, 2] += hk * az
            if rec_every > 0 and (half * n_half + step + 1) % rec_every == 0 and rec < track.shape[0]:
                tt = tau * half + h * (step + 1)
                track[rec, 0] = tt
                for i in range(nb):
                    if half == 0:
                        base = free0[i, 2] + u1[i, 2] * tt
                    else:
                        base = free0[i, 2] + u1[i, 2] * tau + u2[i, 2] * (tt - tau)
                    track[rec, 1 + i] = base + dx[i, 2]
                rec += 1
        for i in range(nb):
            for c in range(3):
                out[half, i, c] = dx[i, c]
    return out


@dataclass
class TrajectoryResult:
    phase: float
    times: np.ndarray
    laser_track: np.ndarray
    atom_top_track: np.ndarray
    atom_bottom_track: np.ndarray
    steps_per_pulse_interval: int = 0
    halving_difference: float = 0.0
    deviations: np.ndarray = field(default=None, repr=False)


def _bodies(spec: ExperimentSpec, constants: PhysicalConstants):
    vr = constants.hbar * spec.k / spec.m_a
    free0 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, spec.z0], [0.0, 0.0, spec.z0]])
    u1 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, vr], [0.0, 0.0, 0.0]])
    u2 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, vr]])
    return free0, u1, u2


def _run_trajectories(flyby, spec, constants, n_half, rec_every=0, n_rec=0):
    free0, u1, u2 = _bodies(spec, constants)
    track = np.zeros((max(n_rec, 1), 4))
    gm = constants.G * flyby.m_b
    dev = _perturbed_bodies(free0, u1, u2, float(spec.tau), flyby.r_b, flyby.v_b, gm,
                            int(n_half), _DRIFT, _KICK, int(rec_every), track)
    # deviations vanish at t = 0, and the free part is affine, so only these remain
    rel_tau = 0.5 * (dev[0, 1, 2] + dev[0, 2, 2]) - dev[0, 0, 2]
    rel_2tau = 0.5 * (dev[1, 1, 2] + dev[1, 2, 2]) - dev[1, 0, 2]
    phase = spec.k * (rel_2tau - 2.0 * rel_tau)
    return phase, dev, track[:n_rec]


def integrate_flyby_trajectories(flyby: FlybySpec, spec: ExperimentSpec,
                                 constants: PhysicalConstants, step: float,
                                 rel_tol: float = 1e-6, n_records: int = 0,
                                 min_distance_ratio: float = 1e-3) -> TrajectoryResult:
    """Integrate laser and both atom arms through a straight-line fly-by.

    The phase is k [q(2 tau) - 2 q(tau) + q(0)] with q the mean of the two
    arms minus the laser. The run is repeated at half the step; a relative
    disagreement above ``rel_tol`` raises ``AccuracyError``.
    """
    if not step > 0:
        raise ValueError("step must be > 0")
    tau = spec.tau
    free0, u1, u2 = _bodies(spec, constants)
    # back-action-free regime: the particle must stay clear of every body
    ts = np.linspace(0.0, 2.0 * tau, 4001)
    for i in range(3):
        pos = free0[i] + np.where(ts[:, None] < tau, u1[i] * ts[:, None],
                                  u1[i] * tau + u2[i] * (ts[:, None] - tau))
        sep = np.linalg.norm(flyby.r_b + flyby.v_b * ts[:, None] - pos, axis=1)
        if sep.min() < min_distance_ratio * sep[0]:
            raise ValueError("fly-by comes within min_distance_ratio of its initial "
                             "distance to a tracked body")
    n_half = max(1, int(math.ceil(tau / step)))
    rec_every = max(1, (2 * n_half) // n_records) if n_records else 0
    phase, dev, track = _run_trajectories(flyby, spec, constants, n_half, rec_every, n_records)
    phase2, _, _ = _run_trajectories(flyby, spec, constants, 2 * n_half)
    diff = abs(phase2 - phase)
    if diff > rel_tol * abs(phase2) and diff > 0.0:
        raise AccuracyError(f"step halving changed the phase by {diff:.3e} "
                            f"(relative {diff / max(abs(phase2), 1e-300):.3e})")
    return TrajectoryResult(phase2, track[:, 0], track[:, 1], track[:, 2], track[:, 3],
                            2 * n_half, diff, dev)


def write_trajectory_dump(path, result: TrajectoryResult, delimiter: str = ","):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["t", "z_laser", "z_top", "z_bottom"])
        for row in zip(result.times, result.laser_track, result.atom_top_track,
                       result.atom_bottom_track):
            w.writerow([repr(float(x)) for x in row])


def tidal_phase_bound(flyby: FlybySpec, spec: ExperimentSpec, constants: PhysicalConstants) -> float:
    """Upper bound k 2 G m_b |dr| tau^2 / R^3 on the trajectory phase.

    |dr| is the largest atom-laser separation and R the smallest distance
    between the particle and the experiment region during the run.
    """
    tau = spec.tau
    sep = spec.z0 + constants.hbar * spec.k * tau / spec.m_a
    t = min(max(-float(flyby.r_b @ flyby.v_b) / float(flyby.v_b @ flyby.v_b), 0.0), 2.0 * tau)
    r_close = float(np.linalg.norm(flyby.r_b + flyby.v_b * t)) - sep
    if r_close <= 0:
        return math.inf
    return spec.k * 2.0 * constants.G * flyby.m_b * sep * tau ** 2 / r_close ** 3


@numba.njit(cache=True)
def _kepler(x, v, gm, h, n, drift, kick):
    for _ in range(n):
        for sub in range(4):
            x[0] += drift[sub] * h * v[0]
            x[1] += drift[sub] * h * v[1]
            x[2] += drift[sub] * h * v[2]
            if sub == 3:
                break
            ax, ay, az = _accel(x[0], x[1], x[2], 0.0, 0.0, 0.0, gm)
            v[0] += kick[sub] * h * ax
            v[1] += kick[sub] * h * ay
            v[2] += kick[sub] * h * az


def static_energy_drift(gm: float = 1.0, r0: float = 1.0, ecc: float = 0.3,
                        n_steps: int = 1_000_000, steps_per_orbit: int = 20_000) -> float:
    """Relative energy change of a test body orbiting a fixed mass with the same scheme."""
    x = np.array([r0 * (1.0 + ecc), 0.0, 0.0])
    a = r0
    v_apo = math.sqrt(gm * (1.0 - ecc) / (a * (1.0 + ecc)))
    v = np.array([0.0, v_apo, 0.0])
    period = 2.0 * math.pi * math.sqrt(a ** 3 / gm)

    def energy():
        return 0.5 * float(v @ v) - gm / float(np.linalg.norm(x))

    e0 = energy()
    _kepler(x, v, gm, period / steps_per_orbit, n_steps, _DRIFT, _KICK)
    return abs(energy() - e0) / abs(e0)


# ---------------------------------------------------------------------------
# semiclassical phase integrals


def _as_path(p):
    if callable(p):
        return p
    arr = np.asarray(p, dtype=float).reshape(3)
    return lambda t, a=arr: a


def _segments(t_end, scale):
    """Log-spaced breakpoints between 0 and t_end."""
    if t_end <= scale:
        return np.array([0.0, t_end])
    n = int(math.ceil(math.log2(t_end / scale))) + 1
    pts = np.concatenate(([0.0], scale * 2.0 ** np.arange(n)))
    pts = pts[pts < t_end]
    return np.append(pts, t_end)


def _closest(flyby, r):
    t = -float((flyby.r_b - r) @ flyby.v_b) / float(flyby.v_b @ flyby.v_b)
    return max(t, 0.0)


def _integrate_segments(f, pts, rel_tol):
    total = 0.0
    err_total = 0.0
    # quad's own warnings are superseded by the explicit error check below
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(pts[:-1], pts[1:]):
            val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=200)
            total += val
            err_total += err
    if not math.isfinite(total) or err_total > rel_tol * max(abs(total), 1e-300) and err_total > 1e-300:
        raise AccuracyError(f"quadrature error estimate {err_total:.3e} too large")
    return total


@dataclass(frozen=True)
class PhaseDifference:
    value: float
    tail_bound: float


def single_path_phase(flyby: FlybySpec, point, t_end: float, coupling: float = 1.0) -> float:
    """V0 int_0^t_end dt / |point - r_b - v_b t|; grows like (V0/v) ln t_end."""
    r = np.asarray(point, dtype=float).reshape(3)
    speed = flyby.speed
    scale = max(float(np.linalg.norm(r - flyby.r_b)) / speed, _closest(flyby, r), 1e-300)

    def f(t):
        return 1.0 / float(np.linalg.norm(r - flyby.r_b - flyby.v_b * t))

    return coupling * _integrate_segments(f, _segments(t_end, scale), 1e-9)


def relative_phase_difference(flyby: FlybySpec, atom_paths, t_end: float,
                              coupling: float = 1.0) -> PhaseDifference:
    """Finite phase difference between two atom locations, with the tail bound beyond t_end."""
    p1, p2 = (_as_path(p) for p in atom_paths)
    r1_0 = np.asarray(p1(0.0), dtype=float)
    r2_0 = np.asarray(p2(0.0), dtype=float)
    speed = flyby.speed
    reach = max(np.linalg.norm(r1_0 - flyby.r_b), np.linalg.norm(r2_0 - flyby.r_b))
    scale = max(reach / speed, _closest(flyby, r1_0), 1e-300)

    def f(t):
        b = flyby.r_b + flyby.v_b * t
        return (1.0 / float(np.linalg.norm(np.asarray(p1(t)) - b))
                - 1.0 / float(np.linalg.norm(np.asarray(p2(t)) - b)))

    if np.array_equal(r1_0, r2_0) and not (callable(atom_paths[0]) or callable(atom_paths[1])):
        return PhaseDifference(0.0, 0.0)
    val = coupling * _integrate_segments(f, _segments(t_end, scale), 1e-8)
    sep = float(np.linalg.norm(r1_0 - r2_0))
    if speed * t_end > reach:
        tail = abs(coupling) * sep / (speed * (speed * t_end - reach))
    else:
        tail = math.inf
    return PhaseDifference(val, tail)
