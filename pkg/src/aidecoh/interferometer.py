"""Ideal three-pulse Mach-Zehnder signal chain.

Convention: an ``OverlapFactor`` never includes the control phase
e^{i theta0}; ``population_from_overlap`` applies it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .units import ExperimentSpec, PhysicalConstants, SI

OVERLAP_TOL = 1e-12


class DivergenceError(ArithmeticError):
    """A rate integral does not converge under grid extension."""


@dataclass(frozen=True)
class OverlapFactor:
    """Complex overlap between the two interferometer arms (control phase excluded)."""

    value: complex

    def __post_init__(self):
        v = complex(self.value)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ValueError(f"overlap must be finite, got {v!r}")
        if abs(v) > 1.0 + OVERLAP_TOL:
            raise ValueError(f"|overlap| = {abs(v)!r} exceeds 1; upstream formula error")
        object.__setattr__(self, "value", v)

    @property
    def contrast(self) -> float:
        return abs(self.value)

    @property
    def phase(self) -> float:
        return math.atan2(self.value.imag, self.value.real)

    def __mul__(self, other: "OverlapFactor") -> "OverlapFactor":
        return OverlapFactor(self.value * other.value)


def _as_complex(overlap) -> complex:
    return overlap.value if isinstance(overlap, OverlapFactor) else complex(overlap)


def population_from_overlap(overlap, theta0: float) -> float:
    """Ground-state population 1/2 + 1/2 Re(e^{i theta0} overlap)."""
    ov = _as_complex(overlap)
    if abs(ov) > 1.0 + OVERLAP_TOL:
        raise ValueError(f"|overlap| = {abs(ov)!r} exceeds 1; upstream formula error")
    rho = 0.5 + 0.5 * (complex(math.cos(theta0), math.sin(theta0)) * ov).real
    if rho < 0.0:
        if rho < -OVERLAP_TOL:
            raise ValueError(f"population {rho!r} below 0")
        rho = 0.0
    elif rho > 1.0:
        if rho > 1.0 + OVERLAP_TOL:
            raise ValueError(f"population {rho!r} above 1")
        rho = 1.0
    return rho


def free_population(theta0: float) -> float:
    return 0.5 + 0.5 * math.cos(theta0)


class Trajectory:
    """Vertical position z(t) given as a polynomial, a callable or samples.

    Polynomial trajectories are kept as coefficient arrays so that sums and
    differences cancel exactly, term by term.
    """

    def __init__(self, coeffs: Sequence[float] | None = None,
                 func: Callable[[float], float] | None = None,
                 samples: tuple[Sequence[float], Sequence[float]] | None = None):
        given = sum(x is not None for x in (coeffs, func, samples))
        if given != 1:
            raise ValueError("give exactly one of coeffs, func, samples")
        self.coeffs = None if coeffs is None else np.asarray(coeffs, dtype=float)
        self.func = func
        if samples is not None:
            t, z = (np.asarray(a, dtype=float) for a in samples)
            if t.ndim != 1 or t.shape != z.shape or t.size < 2 or np.any(np.diff(t) <= 0):
                raise ValueError("samples must be increasing 1-d time and value arrays")
            if not (np.all(np.isfinite(t)) and np.all(np.isfinite(z))):
                raise ValueError("samples must be finite")
            self.samples = (t, z)
        else:
            self.samples = None

    @classmethod
    def polynomial(cls, *coeffs: float) -> "Trajectory":
        """z(t) = c0 + c1 t + c2 t^2 + ..."""
        return cls(coeffs=coeffs)

    def __call__(self, t: float) -> float:
        if self.coeffs is not None:
            return float(np.polynomial.polynomial.polyval(t, self.coeffs))
        if self.func is not None:
            return float(self.func(t))
        ts, zs = self.samples
        if t < ts[0] - 1e-12 * max(1.0, abs(ts[0])) or t > ts[-1] + 1e-12 * max(1.0, abs(ts[-1])):
            raise ValueError(f"t={t!r} outside sampled range [{ts[0]}, {ts[-1]}]")
        return float(np.interp(t, ts, zs))

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        if self.coeffs is not None and other.coeffs is not None:
            n = max(self.coeffs.size, other.coeffs.size)
            a = np.zeros(n)
            b = np.zeros(n)
            a[:self.coeffs.size] = self.coeffs
            b[:other.coeffs.size] = other.coeffs
            return Trajectory(coeffs=a - b)
        return Trajectory(func=lambda t, s=self, o=other: s(t) - o(t))

    def stencil(self, tau: float) -> float:
        """z(2 tau) - 2 z(tau) + z(0)."""
        if self.coeffs is not None:
            # constant and linear weights vanish identically
            total = 0.0
            for n, c in enumerate(self.coeffs):
                if n < 2 or c == 0.0:
                    continue
                total += c * ((2.0 * tau) ** n - 2.0 * tau ** n)
            return total
        z0, z1, z2 = self(0.0), self(tau), self(2.0 * tau)
        for z in (z0, z1, z2):
            if not math.isfinite(z):
                raise ValueError("trajectory is not finite on [0, 2 tau]")
        return z2 - 2.0 * z1 + z0


@dataclass(frozen=True)
class RelativeTrajectory:
    """Atom centroid minus laser position on [0, 2 tau]."""

    z_rel: Trajectory

    @classmethod
    def from_bodies(cls, atom: Trajectory, laser: Trajectory) -> "RelativeTrajectory":
        return cls(atom - laser)


def overlap_from_relative_trajectory(traj: RelativeTrajectory | Trajectory,
                                     spec: ExperimentSpec) -> OverlapFactor:
    """Semiclassical centroid overlap exp{i k [z(2tau) - 2 z(tau) + z(0)]}."""
    z = traj.z_rel if isinstance(traj, RelativeTrajectory) else traj
    phase = spec.k * z.stencil(spec.tau)
    return OverlapFactor(complex(math.cos(phase), math.sin(phase)))


def uniform_acceleration_population(g: float, spec: ExperimentSpec,
                                    constants: PhysicalConstants | None = None) -> float:
    """Population when atom and laser share a uniform acceleration g."""
    hbar = spec.hbar if constants is None else constants.hbar
    v_centroid = hbar * spec.k / (2.0 * spec.m_a)
    atom = Trajectory.polynomial(spec.z0, v_centroid, 0.5 * g)
    laser = Trajectory.polynomial(0.0, 0.0, 0.5 * g)
    ov = overlap_from_relative_trajectory(RelativeTrajectory.from_bodies(atom, laser), spec)
    return population_from_overlap(ov, spec.theta0)


def maxwell_momentum_pdf(q, m_b: float, T: float, k_B: float = SI.k_B):
    """Maxwell-Boltzmann density of |p| normalised on [0, inf)."""
    a = m_b * k_B * T
    return 4.0 * math.pi * q * q * (2.0 * math.pi * a) ** -1.5 * np.exp(-q * q / (2.0 * a))


def _gamma_on_grid(grid, n, m_b, T, sigma_of_q, k_B):
    def integrand(q):
        return maxwell_momentum_pdf(q, m_b, T, k_B) * (q / m_b) * sigma_of_q(q)

    total = 0.0
    for lo, hi in zip(grid[:-1], grid[1:]):
        val, err = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-10, limit=200)
        if not math.isfinite(val):
            raise DivergenceError(f"non-finite integral on [{lo:.3g}, {hi:.3g}]")
        total += val
    return n * total


def collisional_gamma_reference(n: float, m_b: float, T: float,
                                sigma_of_q: Callable[[float], float],
                                q_grid: Sequence[float] | None = None,
                                k_B: float = SI.k_B, rel_tol: float = 0.01) -> float:
    """Collision rate n * int f(q,T) (q/m_b) sigma(q) dq by adaptive quadrature.

    ``q_grid`` lists integration breakpoints (increasing, positive). The
    result is accepted only if extending the grid to [q_lo/2, 2 q_hi]
    changes it by at most ``rel_tol``; otherwise ``DivergenceError``.
    """
    if n < 0 or m_b <= 0 or T <= 0:
        raise ValueError("need n >= 0, m_b > 0, T > 0")
    q_th = math.sqrt(m_b * k_B * T)
    if q_grid is None:
        q_grid = q_th * np.geomspace(1e-4, 40.0, 25)
    grid = np.asarray(q_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("q_grid must be increasing positive breakpoints")
    base = _gamma_on_grid(grid, n, m_b, T, sigma_of_q, k_B)
    wide = np.concatenate(([grid[0] / 2.0], grid, [grid[-1] * 2.0]))
    ext = _gamma_on_grid(wide, n, m_b, T, sigma_of_q, k_B)
    scale = max(abs(base), abs(ext))
    if scale > 0 and abs(ext - base) > rel_tol * scale:
        raise DivergenceError(
            f"rate changed from {base:.6g} to {ext:.6g} when the momentum grid was doubled")
    return ext
