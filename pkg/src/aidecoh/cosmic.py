"""DC-Stark kicks on a polarizable atom from a passing charge."""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .units import RB87_MASS, RB_POLARIZABILITY, SI, PhysicalConstants


@dataclass(frozen=True)
class CosmicRaySpec:
    """Charge q [C] passing at speed v [m/s] and impact parameter b [m].

    alpha_a is the SI polarizability [C^2 m^2 / J]; m_a [kg]; E_applied [V/m]
    is an optional static field parallel to the impact direction; n_cr
    [1/m^3] is the number density of such charges.
    """

    q: float = SI.e_charge
    v: float = SI.c
    b: float = 1.0
    alpha_a: float = RB_POLARIZABILITY
    m_a: float = RB87_MASS
    E_applied: float = 0.0
    n_cr: float = 1e-3

    def __post_init__(self):
        if not (math.isfinite(self.q) and self.q != 0):
            raise ValueError("q must be non-zero")
        for name in ("v", "b", "alpha_a", "m_a"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be > 0, got {val!r}")
        if not (math.isfinite(self.E_applied) and self.E_applied >= 0):
            raise ValueError("E_applied must be >= 0")
        if not (math.isfinite(self.n_cr) and self.n_cr >= 0):
            raise ValueError("n_cr must be >= 0")


def ray_field(spec: CosmicRaySpec, constants: PhysicalConstants = SI, b: float | None = None) -> float:
    """Coulomb field of the ray at distance b [V/m]."""
    b = spec.b if b is None else b
    return constants.eps0_factor * abs(spec.q) / (b * b)


def stark_kick(spec: CosmicRaySpec, constants: PhysicalConstants = SI) -> float:
    """(alpha/m_a) (q / 4 pi eps0)^2 / (b^4 v) [m/s]."""
    kq = constants.eps0_factor * spec.q
    return spec.alpha_a / spec.m_a * kq * kq / (spec.b ** 4 * spec.v)


def stark_kick_with_bias(spec: CosmicRaySpec, constants: PhysicalConstants = SI) -> float:
    """(alpha/m_a) E_ray (E_applied + E_ray) / v with E_ray = q / (4 pi eps0 b^2) [m/s]."""
    e_ray = ray_field(spec, constants)
    return spec.alpha_a / spec.m_a * e_ray * (spec.E_applied + e_ray) / spec.v


def crossover_radius(spec: CosmicRaySpec, constants: PhysicalConstants = SI) -> float:
    """Impact parameter where the ray field equals the applied field."""
    if spec.E_applied <= 0:
        return math.inf
    return math.sqrt(constants.eps0_factor * abs(spec.q) / spec.E_applied)


def stark_kick_quadrature(spec: CosmicRaySpec, constants: PhysicalConstants = SI,
                          kernel: str = "force") -> float:
    """Time integral of the Stark interaction along the straight pass.

    kernel="force": the transverse force d/db of (alpha/2) E^2, i.e.
    2 alpha (q/4 pi eps0)^2 b / (b^2 + v^2 t^2)^3 divided by m_a.
    kernel="displayed": alpha (q/4 pi eps0)^2 / (b^2 + v^2 t^2)^(5/2) divided by m_a.
    """
    kq = constants.eps0_factor * spec.q
    pre = spec.alpha_a * kq * kq / spec.m_a
    b, v = spec.b, spec.v
    if kernel == "force":
        f = lambda s: 2.0 * b / (b * b + s * s) ** 3  # noqa: E731
    elif kernel == "displayed":
        f = lambda s: 1.0 / (b * b + s * s) ** 2.5  # noqa: E731
    else:
        raise ValueError("kernel must be 'force' or 'displayed'")
    # integrate in path length s = v t, then divide by v
    val, _ = integrate.quad(f, -math.inf, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return pre * val / v


@dataclass(frozen=True)
class EventRate:
    rate: float
    waiting_time: float
    per_shot: float
    infinite_wait: bool


def event_rate(spec: CosmicRaySpec, b_max: float, tau: float | None = None) -> EventRate:
    """Rate n_cr v pi b_max^2 of passes inside b_max, with the mean waiting time."""
    if not b_max > 0:
        raise ValueError("b_max must be > 0")
    rate = spec.n_cr * spec.v * math.pi * b_max * b_max
    wait = math.inf if rate == 0 else 1.0 / rate
    per_shot = rate * 2.0 * tau if tau is not None else math.nan
    return EventRate(rate, wait, per_shot, rate == 0)
