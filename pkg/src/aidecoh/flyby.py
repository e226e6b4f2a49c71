"""Impulsive model of a single close fly-by (collision-cone particle).

A bath particle on a straight line r_b + v_b t gives every point r a
velocity kick delta v_z(r) at its closest-approach time t_kick(r). The
interferometer sees the laser kick at r = 0 and the atom kick at the
centroid d e3, each weighted by the triangular window tau - |tau - t|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .interferometer import OverlapFactor
from .regime import SingularityError, check
from .units import SI, ExperimentSpec, PhysicalConstants, effective_dipole

E3 = np.array([0.0, 0.0, 1.0])
V_GALACTIC = 220e3  # m/s


@dataclass(frozen=True)
class FlybySpec:
    """Straight-line bath particle: position r_b [m] at t = 0, velocity v_b [m/s], mass m_b [kg]."""

    r_b: np.ndarray
    v_b: np.ndarray
    m_b: float

    def __post_init__(self):
        r = np.array(self.r_b, dtype=float).reshape(3)
        v = np.array(self.v_b, dtype=float).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
            raise ValueError("fly-by position and velocity must be finite")
        if not float(v @ v) > 0:
            raise ValueError("fly-by velocity must be non-zero")
        if not (math.isfinite(self.m_b) and self.m_b >= 0):
            raise ValueError("m_b must be >= 0")
        object.__setattr__(self, "r_b", r)
        object.__setattr__(self, "v_b", v)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.v_b))

    def position(self, t):
        return self.r_b + self.v_b * t


@dataclass(frozen=True)
class KickEvent:
    t_kick: float
    dv_z: float
    grad_dv_z: np.ndarray


def _target(target) -> np.ndarray:
    return np.zeros(3) if target is None else np.asarray(target, dtype=float).reshape(3)


def kick_time(flyby: FlybySpec, target=None) -> float:
    """Closest-approach time -(r_b - r).v_b / v_b^2 (not clamped)."""
    v = flyby.v_b
    vv = float(v @ v)
    if vv == 0:
        raise ValueError("zero fly-by velocity")
    return -float((flyby.r_b - _target(target)) @ v) / vv


def _impact(flyby, target):
    t = kick_time(flyby, target)
    bvec = flyby.r_b - _target(target) + flyby.v_b * t
    b2 = float(bvec @ bvec)
    if b2 == 0.0:
        raise SingularityError("fly-by passes through the target point")
    return t, bvec, b2


def velocity_kick(flyby: FlybySpec, target, constants: PhysicalConstants) -> float:
    """Integrated z-velocity change at ``target``: (2 G m_b / v_b) b_z / b^2."""
    _, bvec, b2 = _impact(flyby, target)
    return 2.0 * constants.G * flyby.m_b / flyby.speed * bvec[2] / b2


def velocity_kick_gradient(flyby: FlybySpec, target, constants: PhysicalConstants) -> np.ndarray:
    """Spatial gradient of ``velocity_kick`` with respect to the target point."""
    _, bvec, b2 = _impact(flyby, target)
    v = flyby.v_b
    vv = float(v @ v)
    pre = 2.0 * constants.G * flyby.m_b / math.sqrt(vv)
    return 2.0 * pre * bvec[2] / (b2 * b2) * bvec - pre * (E3 - v * v[2] / vv) / b2


def kick_event(flyby: FlybySpec, target, constants: PhysicalConstants) -> KickEvent:
    return KickEvent(kick_time(flyby, target), velocity_kick(flyby, target, constants),
                     velocity_kick_gradient(flyby, target, constants))


def time_window(t_kick: float, tau: float) -> float:
    """tau - |tau - t| on [0, 2 tau], zero outside."""
    if t_kick <= 0.0 or t_kick >= 2.0 * tau:
        return 0.0
    return tau - abs(tau - t_kick)


def flyby_overlap_factors(flyby: FlybySpec, spec: ExperimentSpec, constants: PhysicalConstants,
                          strict: bool = False) -> tuple[complex, complex, float]:
    """The three factors (relative kick, differential recoil phase, contrast loss)."""
    hbar = constants.hbar
    k, tau, m, s = spec.k, spec.tau, spec.m_a, spec.sigma
    d = effective_dipole(spec, constants)
    dvec = d * E3
    # distance from the atom centroid compared with the arm separation
    _, b_atom, b2_atom = _impact(flyby, dvec)
    sep = hbar * k * tau / m
    if sep > 0:
        check("flyby_close", sep / math.sqrt(b2_atom), 1e-2, strict,
              "arm separation / closest approach")
    laser = kick_event(flyby, None, constants)
    atom = kick_event(flyby, dvec, constants)
    w_l = time_window(laser.t_kick, tau)
    w_a = time_window(atom.t_kick, tau)
    f1 = complex(math.cos(k * (atom.dv_z * w_a - laser.dv_z * w_l)),
                 math.sin(k * (atom.dv_z * w_a - laser.dv_z * w_l)))
    ph2 = hbar * k * k / (2.0 * m) * atom.grad_dv_z[2] * (atom.t_kick - tau) * w_a
    f2 = complex(math.cos(ph2), math.sin(ph2))
    g2 = float(atom.grad_dv_z @ atom.grad_dv_z)
    f3 = math.exp(-g2 * w_a * w_a * (k * k * s * s / 2.0
                                     + hbar ** 2 * k * k * atom.t_kick ** 2 / (8.0 * m * m * s * s)))
    return f1, f2, f3


def flyby_overlap(flyby: FlybySpec, spec: ExperimentSpec, constants: PhysicalConstants,
                  strict: bool = False) -> OverlapFactor:
    f1, f2, f3 = flyby_overlap_factors(flyby, spec, constants, strict)
    return OverlapFactor(f1 * f2 * f3)


def flyby_phase(flyby: FlybySpec, spec: ExperimentSpec, constants: PhysicalConstants) -> float:
    """Phase of the first two factors as an unwrapped number."""
    hbar = constants.hbar
    k, tau, m = spec.k, spec.tau, spec.m_a
    d = effective_dipole(spec, constants)
    laser = kick_event(flyby, None, constants)
    atom = kick_event(flyby, d * E3, constants)
    w_l = time_window(laser.t_kick, tau)
    w_a = time_window(atom.t_kick, tau)
    return (k * (atom.dv_z * w_a - laser.dv_z * w_l)
            + hbar * k * k / (2.0 * m) * atom.grad_dv_z[2] * (atom.t_kick - tau) * w_a)


def sensitivity_floor(spec: ExperimentSpec, constants: PhysicalConstants | None = None) -> float:
    """Weakest observable kick 1 / (Q k tau sqrt(N)) [m/s]."""
    return 1.0 / (spec.Q * spec.k * spec.tau * math.sqrt(spec.N_atoms))


def max_readable_impact(bath, dv_min: float, v_ref: float = V_GALACTIC,
                        constants: PhysicalConstants = SI) -> float:
    """Largest impact parameter 2 G m_b / (v_ref dv_min) giving a readable kick [m].

    ``bath`` is a BathSpec or a bare particle mass in kg.
    """
    m_b = float(getattr(bath, "m_b", bath))
    if not (m_b > 0 and dv_min > 0 and v_ref > 0):
        raise ValueError("m_b, dv_min and v_ref must be > 0")
    return 2.0 * constants.G * m_b / (v_ref * dv_min)


def phase_recovery_ratio(b: float, d: float, geometry: str, spec: ExperimentSpec,
                         constants: PhysicalConstants) -> float:
    """|net relative-kick phase| / (|laser phase| + |atom phase|) for a perpendicular pass.

    The particle moves along x and crosses (0, 0, -b) ("below" the laser) or
    (0, 0, +b) ("above") at t = tau; the atom centroid sits at d e3.
    """
    if not (b > 0 and d >= 0):
        raise ValueError("need b > 0 and d >= 0")
    sign = {"below": -1.0, "above": 1.0}.get(geometry)
    if sign is None:
        raise ValueError("geometry must be 'below' or 'above'")
    tau = spec.tau
    u = b / tau
    fb = FlybySpec(r_b=(-u * tau, 0.0, sign * b), v_b=(u, 0.0, 0.0), m_b=1.0)
    laser = spec.k * velocity_kick(fb, None, constants) * time_window(kick_time(fb), tau)
    dvec = d * E3
    atom = spec.k * velocity_kick(fb, dvec, constants) * time_window(kick_time(fb, dvec), tau)
    total = abs(laser) + abs(atom)
    return 0.0 if total == 0 else abs(atom - laser) / total
