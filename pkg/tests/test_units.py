import math

import pytest
from hypothesis import given, strategies as st

from aidecoh.units import (DIMENSIONLESS, RB87_MASS, SI, ExperimentSpec, PhysicalConstants,
                           effective_dipole, sql_standard_quantum_limit_sigma)

pos = st.floats(1e-3, 1e3)


def test_presets_positive_and_distinct():
    for c in (SI, DIMENSIONLESS):
        for name in ("G", "hbar", "k_B", "eps0_factor", "e_charge", "c", "m_planck"):
            assert getattr(c, name) > 0
    assert DIMENSIONLESS.G == DIMENSIONLESS.hbar == 1.0
    assert SI.G == pytest.approx(6.6743e-11)
    assert SI.m_planck == pytest.approx(2.176434e-8, rel=1e-6)
    assert PhysicalConstants.preset("si") == SI


def test_constants_reject_nonpositive():
    with pytest.raises(ValueError):
        PhysicalConstants(G=0.0, hbar=1, k_B=1, eps0_factor=1, e_charge=1, c=1, m_planck=1)
    with pytest.raises(ValueError):
        PhysicalConstants.preset("cgs")


@pytest.mark.parametrize("kw", [dict(m_a=-1.0), dict(tau=0.0), dict(sigma=-1.0), dict(z0=-0.1),
                                dict(Q=0), dict(N_atoms=0), dict(Q=1.5)])
def test_experiment_validation(kw):
    base = dict(m_a=1.0, k=1.0, tau=1.0)
    with pytest.raises(ValueError):
        ExperimentSpec(**{**base, **kw})


def test_effective_dipole_examples():
    rb = ExperimentSpec(m_a=RB87_MASS, k=2 * math.pi / 780e-9, tau=1.0, z0=1.0)
    # hbar k tau / 2 m_a is 2.94 mm for rubidium at 780 nm
    assert effective_dipole(rb, SI) == pytest.approx(1.0029431, rel=1e-7)
    unit = ExperimentSpec(m_a=1.0, k=1.0, tau=1.0, z0=0.0, hbar=2.0)
    assert effective_dipole(unit) == pytest.approx(1.0)
    assert effective_dipole(ExperimentSpec(m_a=1.0, k=0.0, tau=1.0, z0=5.0)) == 5.0
    assert unit.d == effective_dipole(unit)


def test_sql_sigma_examples():
    assert sql_standard_quantum_limit_sigma(
        ExperimentSpec(m_a=1.0, k=1.0, tau=2.0), DIMENSIONLESS) == pytest.approx(1.0)
    rb = ExperimentSpec(m_a=1.443e-25, k=1.0, tau=1.0)
    assert sql_standard_quantum_limit_sigma(rb, SI) == pytest.approx(1.91e-5, rel=2e-3)
    a = sql_standard_quantum_limit_sigma(ExperimentSpec(m_a=3.0, k=1.0, tau=1.0), DIMENSIONLESS)
    b = sql_standard_quantum_limit_sigma(ExperimentSpec(m_a=3.0, k=1.0, tau=4.0), DIMENSIONLESS)
    assert b == pytest.approx(2 * a)


@given(z0=st.floats(0, 10), k=pos, tau=pos, dz=st.floats(1e-3, 1.0))
def test_dipole_monotone(z0, k, tau, dz):
    s = ExperimentSpec(m_a=1.0, k=k, tau=tau, z0=z0, hbar=1.0)
    d = effective_dipole(s)
    assert effective_dipole(ExperimentSpec(m_a=1.0, k=k, tau=tau, z0=z0 + dz, hbar=1.0)) > d
    assert effective_dipole(ExperimentSpec(m_a=1.0, k=k * (1 + dz), tau=tau, z0=z0, hbar=1.0)) > d
    assert effective_dipole(ExperimentSpec(m_a=1.0, k=k, tau=tau * (1 + dz), z0=z0, hbar=1.0)) > d
