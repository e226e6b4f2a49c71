import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from aidecoh.bath import BathSpec
from aidecoh.flyby import (FlybySpec, flyby_overlap, flyby_overlap_factors, flyby_phase,
                           kick_event, kick_time, max_readable_impact, phase_recovery_ratio,
                           sensitivity_floor, time_window, velocity_kick, velocity_kick_gradient)
from aidecoh.regime import RegimeError, RegimeWarning, SingularityError
from aidecoh.units import DIMENSIONLESS, SI, ExperimentSpec, PhysicalConstants

pytestmark = pytest.mark.filterwarnings("ignore::aidecoh.regime.RegimeWarning")


def unit_spec(**kw):
    base = dict(m_a=1.0, k=1.0, tau=1.0, z0=1.0, sigma=1.0, hbar=1.0)
    base.update(kw)
    return ExperimentSpec(**base)


def quadrature_kick(fb, target, G):
    """Time integral of the z-acceleration, mapped onto a finite angle range.

    With t = t_k + (b / v) tan(a) the infinite tails become the end points
    of a = +-pi/2 and the integrand stays bounded.
    """
    r = np.asarray(target, dtype=float)
    v = fb.v_b
    speed = np.linalg.norm(v)
    tk = -float((fb.r_b - r) @ v) / float(v @ v)
    b = np.linalg.norm(fb.r_b - r + v * tk)

    def f(a):
        t = tk + b / speed * math.tan(a)
        s = fb.r_b + v * t - r
        dtda = b / speed / math.cos(a) ** 2
        return G * fb.m_b * s[2] / np.linalg.norm(s) ** 3 * dtda

    val, _ = integrate.quad(f, -math.pi / 2, math.pi / 2, epsabs=0, epsrel=1e-12, limit=200)
    return val


def random_flyby(rng):
    r = rng.normal(size=3) * rng.uniform(0.5, 5)
    v = rng.normal(size=3) * rng.uniform(0.5, 5)
    return FlybySpec(r_b=r, v_b=v, m_b=rng.uniform(0.1, 3))


# ---------------------------------------------------------------------------
# kick events


def test_kick_time_examples():
    u, b, T = 3.0, 2.0, 0.7
    assert kick_time(FlybySpec((0, 0, b), (u, 0, 0), 1.0)) == 0.0
    assert kick_time(FlybySpec((-u * T, 0, b), (u, 0, 0), 1.0)) == pytest.approx(T)


@given(st.floats(-3, 3))
def test_kick_time_target_shift(d):
    fb = FlybySpec((1.0, -2.0, 0.5), (0.3, 0.4, -1.2), 1.0)
    v = fb.v_b
    shift = kick_time(fb, (0, 0, d)) - kick_time(fb)
    assert shift == pytest.approx(d * v[2] / float(v @ v), abs=1e-12)


def test_flyby_spec_validation():
    with pytest.raises(ValueError):
        FlybySpec((1, 0, 0), (0, 0, 0), 1.0)
    with pytest.raises(ValueError):
        FlybySpec((1, 0, 0), (1, 0, 0), -1.0)
    with pytest.raises(ValueError):
        FlybySpec((math.nan, 0, 0), (1, 0, 0), 1.0)


def test_perpendicular_kick():
    b, v, m = 2.0, 5.0, 3.0
    fb = FlybySpec((4.0, 0.0, -b), (v, 0.0, 0.0), m)
    assert velocity_kick(fb, None, DIMENSIONLESS) == pytest.approx(-2 * m / (v * b), rel=1e-15)
    assert quadrature_kick(fb, np.zeros(3), 1.0) == pytest.approx(-2 * m / (v * b), rel=1e-8)


def test_kick_order_of_magnitude_for_heavy_particle():
    fb = FlybySpec((0.0, 0.0, -30.0), (220e3, 0.0, 0.0), 100 * SI.m_planck)
    dv = abs(velocity_kick(fb, None, SI))
    assert 1e-23 <= dv <= 1e-21


def test_kick_matches_quadrature_for_random_flybys():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        fb = random_flyby(rng)
        target = rng.normal(size=3)
        closed = velocity_kick(fb, target, DIMENSIONLESS)
        quad = quadrature_kick(fb, target, 1.0)
        scale = 2 * fb.m_b / (fb.speed * np.linalg.norm(fb.r_b - target + fb.v_b * kick_time(fb, target)))
        worst = max(worst, abs(closed - quad) / scale)
    assert worst < 1e-8


def test_kick_singular_and_massless():
    fb = FlybySpec((-1.0, 0.0, 0.0), (1.0, 0.0, 0.0), 1.0)
    with pytest.raises(SingularityError):
        velocity_kick(fb, None, DIMENSIONLESS)
    assert velocity_kick(FlybySpec((0, 0, 1.0), (1, 0, 0), 0.0), None, DIMENSIONLESS) == 0.0


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(100):
        fb = random_flyby(rng)
        target = rng.normal(size=3)
        b = np.linalg.norm(fb.r_b - target + fb.v_b * kick_time(fb, target))
        h = 1e-6 * b
        fd = np.empty(3)
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            fd[i] = (velocity_kick(fb, target + e, DIMENSIONLESS)
                     - velocity_kick(fb, target - e, DIMENSIONLESS)) / (2 * h)
        g = velocity_kick_gradient(fb, target, DIMENSIONLESS)
        np.testing.assert_allclose(g, fd, rtol=0, atol=1e-5 * np.linalg.norm(g))


def test_gradient_symmetry_for_perpendicular_pass():
    fb = FlybySpec((-3.0, 0.0, -2.0), (1.5, 0.0, 0.0), 1.0)
    g = velocity_kick_gradient(fb, None, DIMENSIONLESS)
    assert abs(g @ fb.v_b) < 1e-15


@given(st.floats(0.5, 4), st.floats(0.5, 4), st.floats(0.5, 4))
def test_gradient_scaling(m, v, b):
    fb = FlybySpec((0.0, 0.0, -b), (v, 0.0, 0.0), m)
    g = np.linalg.norm(velocity_kick_gradient(fb, None, DIMENSIONLESS))
    ref = np.linalg.norm(velocity_kick_gradient(FlybySpec((0, 0, -1.0), (1.0, 0, 0), 1.0),
                                                None, DIMENSIONLESS))
    assert g == pytest.approx(ref * m / (v * b * b), rel=1e-12)


def test_kick_event_bundles_fields():
    fb = FlybySpec((-1.0, 0.0, -2.0), (1.0, 0.0, 0.0), 1.0)
    ev = kick_event(fb, None, DIMENSIONLESS)
    assert ev.t_kick == pytest.approx(1.0)
    assert ev.dv_z == velocity_kick(fb, None, DIMENSIONLESS)


# ---------------------------------------------------------------------------
# overlap


@given(st.floats(-1, 3))
def test_time_window_shape(t):
    w = time_window(t, 1.0)
    assert 0.0 <= w <= 1.0
    assert w == pytest.approx(time_window(2.0 - t, 1.0), abs=1e-15)
    assert time_window(1.0, 1.0) == 1.0


@pytest.mark.parametrize("t0", [0.0, 2.0])
def test_overlap_unity_when_kicks_at_window_edges(t0):
    # particle moving along x, closest approach to both points at t0
    fb = FlybySpec((-2.0 * t0, 0.0, -1.0), (2.0, 0.0, 0.0), 1.0)
    ov = flyby_overlap(fb, unit_spec(z0=0.5, hbar=1e-3, sigma=0.1), DIMENSIONLESS)
    assert ov.value == 1.0


def test_equal_kicks_cancel_first_factor():
    # for a pass along y at height z and offset x0, dv_z is z / (x0^2 + z^2);
    # targets at 0 and d see equal kicks when z (z - d) = x0^2
    spec = unit_spec(z0=0.5, hbar=1.0, m_a=1.0, sigma=0.2)
    d = spec.d
    z = 2.0 * d
    fb = FlybySpec((math.sqrt(z * (z - d)), -0.5, z), (0.0, 1.0, 0.0), 1e-3)
    assert velocity_kick(fb, (0, 0, d), DIMENSIONLESS) == pytest.approx(
        velocity_kick(fb, None, DIMENSIONLESS), rel=1e-14)
    f1, f2, f3 = flyby_overlap_factors(fb, spec, DIMENSIONLESS)
    assert f1 == pytest.approx(1.0, abs=1e-15)
    # the gradient factors do not cancel
    assert abs(f2 - 1.0) > 0 and f3 < 1.0


def test_atom_only_kick_phase():
    # laser kick falls before the first pulse, atom kick exactly at tau
    spec = ExperimentSpec(m_a=1.0, k=1.0, tau=1.0, z0=1.0, sigma=1e-6, hbar=1e-12)
    d = np.array([0.0, 0.0, spec.d])
    v = np.array([0.1, 0.0, 0.5])
    w = np.array([5.0, 0.0, -1.0])
    w *= 3.0 / np.linalg.norm(w)
    fb = FlybySpec(d + w - v * 1.0, v, 1e-4)
    assert kick_time(fb, d) == pytest.approx(1.0)
    assert kick_time(fb) < 0
    consts = PhysicalConstants(G=1.0, hbar=1e-12, k_B=1.0, eps0_factor=1.0, e_charge=1.0, c=1.0,
                               m_planck=1.0)
    ov = flyby_overlap(fb, spec, consts)
    dv = velocity_kick(fb, d, consts)
    assert ov.phase == pytest.approx(spec.k * dv * spec.tau, rel=1e-9)
    assert flyby_phase(fb, spec, consts) == pytest.approx(spec.k * dv * spec.tau, rel=1e-9)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(0, 10))
def test_overlap_modulus_bounded(r, v, m):
    if np.linalg.norm(v) < 1e-3:
        return
    fb = FlybySpec(r, v, m)
    try:
        ov = flyby_overlap(fb, unit_spec(z0=0.5, sigma=0.3), DIMENSIONLESS)
    except SingularityError:
        return
    assert ov.contrast <= 1.0


def test_close_flyby_warns():
    spec = unit_spec(z0=0.0, hbar=1.0, m_a=1.0, k=1.0)
    fb = FlybySpec((-1.0, 0.0, 10.0), (1.0, 0.0, 0.0), 1.0)
    with pytest.warns(RegimeWarning):
        flyby_overlap(fb, spec, DIMENSIONLESS)
    with pytest.raises(RegimeError):
        flyby_overlap(fb, spec, DIMENSIONLESS, strict=True)


# ---------------------------------------------------------------------------
# sensitivity


def test_sensitivity_floor_examples():
    spec = ExperimentSpec(m_a=1.4e-25, k=2 * math.pi / 780e-9, tau=1.0, Q=100, N_atoms=10 ** 6)
    assert sensitivity_floor(spec) == pytest.approx(1.24e-12, rel=0.01)
    assert sensitivity_floor(unit_spec()) == 1.0
    assert sensitivity_floor(unit_spec(N_atoms=4)) == 0.5


def test_max_readable_impact_examples():
    b = max_readable_impact(BathSpec(m_b=SI.m_planck, n0=1.0), 1e-14)
    assert b == pytest.approx(1.3e-9, rel=0.05)
    assert max_readable_impact(2 * SI.m_planck, 1e-14) == pytest.approx(2 * b, rel=1e-15)
    assert max_readable_impact(SI.m_planck, 1e-12) == pytest.approx(b / 100, rel=1e-12)
    with pytest.raises(ValueError):
        max_readable_impact(SI.m_planck, 0.0)


def test_phase_recovery_examples():
    spec = unit_spec()
    assert phase_recovery_ratio(1.0, 10.0, "below", spec, DIMENSIONLESS) == pytest.approx(0.8, abs=0.05)
    assert phase_recovery_ratio(1.0, 1e3, "below", spec, DIMENSIONLESS) > 0.99
    assert phase_recovery_ratio(1.0, 0.01, "below", spec, DIMENSIONLESS) < 0.05
    with pytest.raises(ValueError):
        phase_recovery_ratio(1.0, 1.0, "sideways", spec, DIMENSIONLESS)


def test_phase_recovery_monotone_and_ordered():
    spec = unit_spec()
    ratios = np.geomspace(0.01, 1e3, 60)
    below = [phase_recovery_ratio(1.0, r, "below", spec, DIMENSIONLESS) for r in ratios]
    assert np.all(np.diff(below) >= 0)
    for r in ratios[ratios > 1.0]:
        above = phase_recovery_ratio(1.0, r, "above", spec, DIMENSIONLESS)
        assert above > phase_recovery_ratio(1.0, r, "below", spec, DIMENSIONLESS)
