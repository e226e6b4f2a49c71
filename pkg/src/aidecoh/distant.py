"""Closed-form distant-sector predictions.

Per-configuration overlaps to second order in G, bath-averaged populations
for Gaussian tidal fluctuations, decoherence and phase timescales, the
static-asymmetry (bias) extension and the leading bath-motion correction.

Every averaged evaluator has a complex ``*_overlap`` form X with
rho = 1/2 + 1/2 Re(e^{i theta0} X); contrast is |X| and phase shift arg X.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .bath import BathSpec, MultipoleCoefficients, hess_variance, xi_squared
from .interferometer import OverlapFactor, population_from_overlap
from .regime import RegimeError, check
from .units import ExperimentSpec, PhysicalConstants, effective_dipole

REGIME_LIMIT = 0.1


@dataclass(frozen=True)
class ThetaDisplacement:
    """Phase-space displacement c_phase + c_r . r + c_p . p (second order in G).

    c_phase [rad], c_r [rad/m], c_p [rad s/(kg m)].
    """

    c_phase: float
    c_r: np.ndarray
    c_p: np.ndarray

    def __post_init__(self):
        cr = np.array(self.c_r, dtype=float).reshape(3)
        cp = np.array(self.c_p, dtype=float).reshape(3)
        if not (math.isfinite(self.c_phase) and np.all(np.isfinite(cr)) and np.all(np.isfinite(cp))):
            raise ValueError("theta displacement must be finite")
        object.__setattr__(self, "c_r", cr)
        object.__setattr__(self, "c_p", cp)


@dataclass(frozen=True)
class BiasSpec:
    """Static Y20 asymmetry of number density n_asym [1/m^3] between r_min and R_prime [m]."""

    n_asym: float
    R_prime: float

    def __post_init__(self):
        if not (math.isfinite(self.n_asym) and self.n_asym >= 0):
            raise ValueError(f"n_asym must be >= 0, got {self.n_asym!r}")
        if not (math.isfinite(self.R_prime) and self.R_prime > 0):
            raise ValueError(f"R_prime must be > 0, got {self.R_prime!r}")

    def check_against(self, bath: BathSpec):
        if not self.R_prime > bath.r_min:
            raise ValueError(f"R_prime ({self.R_prime}) must exceed r_min ({bath.r_min})")


def _hz(phi: MultipoleCoefficients):
    h = phi.hess
    return h[2, :].copy(), (h @ h)[2, :]


def theta_displacement(phi: MultipoleCoefficients, spec: ExperimentSpec,
                       constants: PhysicalConstants, strict: bool = False) -> ThetaDisplacement:
    G, hbar = constants.G, constants.hbar
    k, tau, m = spec.k, spec.tau, spec.m_a
    hz, hhz = _hz(phi)
    check("xi2tau4", G * G * tau ** 4 * float(hz @ hz), REGIME_LIMIT, strict,
          "G^2 tau^4 |Phi^z_j|^2")
    t2 = G * tau ** 2
    t4 = G * G * tau ** 4
    c_phase = (0.5 * t2 * hz[2] + 0.125 * t4 * hhz[2]) * hbar * k * k * tau / m
    c_r = k * (t2 * hz + 7.0 / 12.0 * t4 * hhz)
    c_p = k * tau / m * (t2 * hz + 0.25 * t4 * hhz)
    return ThetaDisplacement(c_phase, c_r, c_p)


def gaussian_state_overlap(theta: ThetaDisplacement | None, spec: ExperimentSpec,
                           phi: MultipoleCoefficients, constants: PhysicalConstants,
                           strict: bool = False) -> OverlapFactor:
    """Overlap for a Gaussian wavepacket at rest at z0, to second order in G."""
    hz = phi.hess[2, :]
    return OverlapFactor(_gaussian_overlap_value(spec, hz[2], float(hz @ hz), constants, strict))


def _gaussian_overlap_value(spec, hzz, hh_zz, constants, strict=False):
    G, hbar = constants.G, constants.hbar
    k, tau, s = spec.k, spec.tau, spec.sigma
    d = effective_dipole(spec, constants)
    check("k2sigma2xi2tau4", k * k * s * s * G * G * tau ** 4 * hh_zz, REGIME_LIMIT, strict,
          "k^2 sigma^2 G^2 tau^4 |Phi^z_j|^2")
    quad = _second_order_coefficient(spec, hbar)
    return cmath.exp(1j * k * d * tau ** 2 * G * hzz + quad * tau ** 4 * G * G * hh_zz)


def _second_order_coefficient(spec, hbar):
    k, tau, m, s, z0 = spec.k, spec.tau, spec.m_a, spec.sigma, spec.z0
    return complex(-(k * k * s * s / 2.0 + hbar ** 2 * k * k * tau * tau / (8.0 * m * m * s * s)),
                   7.0 * k * z0 / 12.0 + hbar * k * k * tau / (8.0 * m))


def gaussian_overlaps(spec: ExperimentSpec, hzz, hh_zz, constants: PhysicalConstants):
    """Vectorised per-configuration overlaps from Phi^z_z and sum_j (Phi^z_j)^2."""
    G = constants.G
    k, tau = spec.k, spec.tau
    d = effective_dipole(spec, constants)
    quad = _second_order_coefficient(spec, constants.hbar)
    hzz = np.asarray(hzz, dtype=float)
    hh_zz = np.asarray(hh_zz, dtype=float)
    return np.exp(1j * k * d * tau ** 2 * G * hzz + quad * tau ** 4 * G * G * hh_zz)


def _regime_flags(bath, spec, constants, strict):
    xt = xi_squared(bath, constants) * spec.tau ** 4
    flags = [check("xi2tau4", xt, REGIME_LIMIT, strict, "xi^2 tau^4"),
             check("k2sigma2xi2tau4", spec.k ** 2 * spec.sigma ** 2 * xt, REGIME_LIMIT, strict,
                   "k^2 sigma^2 xi^2 tau^4")]
    return [f for f in flags if f]


def _radicand_coefficient(spec, constants):
    """k^2 sigma^2 + hbar^2 k^2 tau^2 / 4 m^2 sigma^2 - i (7 k z0 / 6 + hbar k^2 tau / 4 m)."""
    hbar = constants.hbar
    k, tau, m, s, z0 = spec.k, spec.tau, spec.m_a, spec.sigma, spec.z0
    return complex(k * k * s * s + hbar ** 2 * k * k * tau * tau / (4.0 * m * m * s * s),
                   -(7.0 * k * z0 / 6.0 + hbar * k * k * tau / (4.0 * m)))


def _sqrt_factor(radicand: complex) -> complex:
    if radicand.real <= 0:
        raise RegimeError("radicand", f"square-root radicand {radicand} has non-positive real part")
    return cmath.sqrt(radicand)


_WEIGHTS = (3.0 / 5.0, 3.0 / 5.0, 4.0 / 5.0)  # (3 + delta_zj) / 5 for j = x, y, z


def averaged_overlap_exact(bath: BathSpec, spec: ExperimentSpec, constants: PhysicalConstants,
                           strict: bool = False) -> complex:
    _regime_flags(bath, spec, constants, strict)
    k = spec.k
    d = effective_dipole(spec, constants)
    xt = xi_squared(bath, constants) * spec.tau ** 4
    coef = _radicand_coefficient(spec, constants)
    denom = 1.0 + 0j
    for w in _WEIGHTS:
        denom *= _sqrt_factor(1.0 + 4.0 * math.pi / 3.0 * w * coef * xt)
    return math.exp(-8.0 * math.pi / 15.0 * k * k * d * d * xt) / denom


def averaged_population_exact(bath: BathSpec, spec: ExperimentSpec, theta0: float,
                              constants: PhysicalConstants, strict: bool = False) -> float:
    """Bath-averaged ground-state population for Gaussian tidal fluctuations."""
    return population_from_overlap(averaged_overlap_exact(bath, spec, constants, strict), theta0)


def averaged_overlap_approx(bath: BathSpec, spec: ExperimentSpec, constants: PhysicalConstants,
                            strict: bool = False) -> complex:
    _regime_flags(bath, spec, constants, strict)
    hbar = constants.hbar
    k, tau, m, s, z0 = spec.k, spec.tau, spec.m_a, spec.sigma, spec.z0
    d = effective_dipole(spec, constants)
    xt = xi_squared(bath, constants) * tau ** 4
    width = k * k * s * s + hbar ** 2 * k * k * tau * tau / (4.0 * m * m * s * s)
    prod = 1.0
    for w in _WEIGHTS:
        prod *= 1.0 + 4.0 * math.pi / 3.0 * w * width * xt
    contrast = math.exp(-8.0 * math.pi / 15.0 * k * k * d * d * xt) / math.sqrt(prod)
    shift = 4.0 * math.pi / 3.0 * k * (7.0 * z0 / 6.0 + hbar * k * tau / (4.0 * m)) * xt
    return contrast * cmath.exp(1j * shift)


def averaged_population_approx(bath: BathSpec, spec: ExperimentSpec, theta0: float,
                               constants: PhysicalConstants, strict: bool = False) -> float:
    """Leading decoherence form: real-width contrast times a shifted cosine."""
    X = averaged_overlap_approx(bath, spec, constants, strict)
    return 0.5 + 0.5 * abs(X) * math.cos(theta0 + cmath.phase(X))


def decoherence_time(bath: BathSpec, spec: ExperimentSpec, constants: PhysicalConstants) -> float:
    """(k^2 d^2 xi^2)^(-1/4) [s]."""
    d = effective_dipole(spec, constants)
    q = spec.k ** 2 * d * d * xi_squared(bath, constants)
    return math.inf if q == 0 else q ** -0.25


def bias_mean_hess(bias: BiasSpec, bath: BathSpec) -> float:
    """Mean Phi^z_z of the Y20 asymmetry: m_b n_asym ln(R'/r_min) [kg/m^3]."""
    if not bias.R_prime >= bath.r_min:
        raise ValueError("R_prime must be >= r_min")
    return bath.m_b * bias.n_asym * math.log(bias.R_prime / bath.r_min)


def bias_coefficients(spec: ExperimentSpec, constants: PhysicalConstants):
    """(A, B, C) multiplying the mean and variance terms of the biased average."""
    G, hbar = constants.G, constants.hbar
    k, tau, m, s, z0 = spec.k, spec.tau, spec.m_a, spec.sigma, spec.z0
    d = effective_dipole(spec, constants)
    A = k * d * tau ** 2 * G
    B = (k * k * s * s / 2.0 + hbar ** 2 * k * k * tau * tau / (8.0 * m * m * s * s)) * tau ** 4 * G * G
    C = (7.0 * k * z0 / 12.0 + hbar * k * k * tau / (8.0 * m)) * tau ** 4 * G * G
    return A, B, C


def biased_overlap(A: float, B: float, C: float, means, variances) -> complex:
    """Gaussian average of the second-order overlap with general means.

    ``means`` and ``variances`` are (x, y, z) for Phi^z_j (not multiplied by G).
    """
    mu = np.asarray(means, dtype=float).reshape(3)
    var = np.asarray(variances, dtype=float).reshape(3)
    s2 = float(mu @ mu)
    denom = 1.0 + 0j
    for v in var:
        denom *= _sqrt_factor(1.0 + 2.0 * complex(B, -C) * v)
    amp = math.exp(-0.5 * A * A * var[2] - B * s2)
    return amp * cmath.exp(1j * (A * mu[2] + C * s2)) / denom


def bias_overlap(bath: BathSpec, bias: BiasSpec, spec: ExperimentSpec,
                 constants: PhysicalConstants, strict: bool = False) -> complex:
    bias.check_against(bath)
    _regime_flags(bath, spec, constants, strict)
    A, B, C = bias_coefficients(spec, constants)
    G2 = constants.G ** 2
    var = [hess_variance(bath, constants, "z", j) / G2 for j in "xyz"]
    mu = [0.0, 0.0, bias_mean_hess(bias, bath)]
    return biased_overlap(A, B, C, mu, var)


def bias_population(bath: BathSpec, bias: BiasSpec, spec: ExperimentSpec, theta0: float,
                    constants: PhysicalConstants, strict: bool = False) -> float:
    return population_from_overlap(bias_overlap(bath, bias, spec, constants, strict), theta0)


def phase_time(bath: BathSpec, bias: BiasSpec, spec: ExperimentSpec,
               constants: PhysicalConstants) -> float:
    """tau at which A <Phi^z_z> = 1 for the static asymmetry [s]."""
    d = effective_dipole(spec, constants)
    q = spec.k * d * constants.G * bias_mean_hess(bias, bath)
    return math.inf if q == 0 else q ** -0.5


def time_dependent_contrast(bath: BathSpec, spec: ExperimentSpec, constants: PhysicalConstants,
                            strict: bool = False) -> float:
    """Dominant contrast including the leading linear-in-time tidal drift."""
    check("vtau_over_rmin", bath.v_beta * spec.tau / bath.r_min, REGIME_LIMIT, strict,
          "v_beta tau / r_min")
    hbar = constants.hbar
    k, tau, m, z0 = spec.k, spec.tau, spec.m_a, spec.z0
    xt = xi_squared(bath, constants) * tau ** 4
    d = z0 + hbar * k * tau / (2.0 * m)
    d7 = z0 + 7.0 / 12.0 * hbar * k * tau / m
    static = math.exp(-8.0 * math.pi / 15.0 * k * k * d * d * xt)
    drift = math.exp(-24.0 * math.pi / 5.0 * k * k * d7 * d7 * xt
                     * (bath.v_beta * tau / bath.r_min) ** 2)
    return static * drift
