"""Physical constants, unit presets and the experiment description.

Everything is SI internally. The ``dimensionless`` preset sets every
constant to one so that oracle tests can dial magnitudes freely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from scipy import constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants used by every evaluator.

    Units: G [m^3 kg^-1 s^-2], hbar [J s], k_B [J/K], eps0_factor = 1/(4 pi eps0)
    [N m^2 C^-2], e_charge [C], c [m/s], m_planck [kg].
    """

    G: float
    hbar: float
    k_B: float
    eps0_factor: float
    e_charge: float
    c: float
    m_planck: float
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        for f in fields(self):
            if f.name == "name":
                continue
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"constant {f.name} must be finite and > 0, got {v!r}")

    @classmethod
    def si(cls) -> "PhysicalConstants":
        G = _sc.G
        hbar = _sc.hbar
        c = _sc.c
        return cls(
            G=G,
            hbar=hbar,
            k_B=_sc.k,
            eps0_factor=1.0 / (4.0 * math.pi * _sc.epsilon_0),
            e_charge=_sc.e,
            c=c,
            m_planck=math.sqrt(hbar * c / G),
            name="si",
        )

    @classmethod
    def dimensionless(cls) -> "PhysicalConstants":
        return cls(G=1.0, hbar=1.0, k_B=1.0, eps0_factor=1.0, e_charge=1.0, c=1.0,
                   m_planck=1.0, name="dimensionless")

    @classmethod
    def preset(cls, name: str) -> "PhysicalConstants":
        name = name.strip().lower()
        if name == "si":
            return cls.si()
        if name in ("dimensionless", "unit", "ones"):
            return cls.dimensionless()
        raise ValueError(f"unknown constants preset {name!r} (expected 'si' or 'dimensionless')")


SI = PhysicalConstants.si()
DIMENSIONLESS = PhysicalConstants.dimensionless()

# Rubidium-87 reference values
RB87_MASS = 86.909180527 * _sc.atomic_mass
RB_POLARIZABILITY = 4.0 * math.pi * _sc.epsilon_0 * 50e-30  # 4 pi eps0 x 50 A^3


@dataclass(frozen=True)
class ExperimentSpec:
    """Three-pulse interferometer parameters.

    m_a [kg], k [1/m] single-photon wavevector, tau [s] pulse spacing,
    theta0 [rad] control phase, z0 [m] initial atom-laser separation,
    sigma [m] wavepacket width, Q momentum multiplier, N_atoms atoms per shot.
    ``hbar`` is carried so that the derived dipole is available without a
    separate constants object; it defaults to the SI value.
    """

    m_a: float
    k: float
    tau: float
    theta0: float = 0.0
    z0: float = 0.0
    sigma: float = 1.0
    Q: int = 1
    N_atoms: int = 1
    hbar: float = SI.hbar

    def __post_init__(self):
        for name in ("m_a", "tau", "sigma", "hbar"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be > 0, got {v!r}")
        if not (math.isfinite(self.k) and self.k >= 0):
            raise ValueError(f"k must be >= 0, got {self.k!r}")
        if not (math.isfinite(self.z0) and self.z0 >= 0):
            raise ValueError(f"z0 must be >= 0, got {self.z0!r}")
        if not math.isfinite(self.theta0):
            raise ValueError("theta0 must be finite")
        if int(self.Q) != self.Q or self.Q < 1:
            raise ValueError(f"Q must be an integer >= 1, got {self.Q!r}")
        if int(self.N_atoms) != self.N_atoms or self.N_atoms < 1:
            raise ValueError(f"N_atoms must be an integer >= 1, got {self.N_atoms!r}")

    @property
    def d(self) -> float:
        """Effective dipole z0 + hbar k tau / (2 m_a) [m]."""
        return self.z0 + self.hbar * self.k * self.tau / (2.0 * self.m_a)

    @property
    def recoil_velocity(self) -> float:
        return self.hbar * self.k / self.m_a

    def with_constants(self, constants: PhysicalConstants) -> "ExperimentSpec":
        return replace(self, hbar=constants.hbar)


def _hbar(spec: ExperimentSpec, constants: PhysicalConstants | None) -> float:
    return spec.hbar if constants is None else constants.hbar


def effective_dipole(spec: ExperimentSpec, constants: PhysicalConstants | None = None) -> float:
    """Distance between the laser and the centre of atomic motion [m]."""
    hbar = _hbar(spec, constants)
    return spec.z0 + hbar * spec.k * spec.tau / (2.0 * spec.m_a)


def sql_standard_quantum_limit_sigma(spec: ExperimentSpec,
                                     constants: PhysicalConstants | None = None) -> float:
    """Wavepacket width sqrt(hbar tau / 2 m_a) that minimises the width-dependent exponents."""
    hbar = _hbar(spec, constants)
    return math.sqrt(hbar * spec.tau / (2.0 * spec.m_a))
