"""Device parameter and equation-of-motion unit tests."""

import math

import numpy as np
import pytest

import stolab as sl
from stolab.device import stt_coefficient
from stolab.errors import ConfigError

RNG = np.random.default_rng(20260819)


def random_unit(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def test_unit_normalizes():
    v = sl.unit([3.0, 0.0, 4.0])
    assert np.allclose(v, [0.6, 0.0, 0.8])
    assert math.isclose(np.linalg.norm(v), 1.0, rel_tol=1e-15)


def test_unit_rejects_zero_vector():
    with pytest.raises(ConfigError):
        sl.unit([0.0, 0.0, 0.0])


def test_device_defaults_are_valid():
    p = sl.DeviceParams()
    assert p.r_av == 500.0
    assert p.dr == 500.0
    assert p.k1[0] > 0.0 and p.k2[2] < 0.0


@pytest.mark.parametrize("kwargs", [
    {"alpha": 0.0},
    {"alpha": -0.1},
    {"gamma": 0.0},
    {"ms": 0.0},
    {"volume": -1e-24},
    {"temperature": -1.0},
    {"r_p": 600.0, "r_ap": 500.0},
    {"r_p": 0.0},
    {"m_p": [0.0, 0.0, 2.0]},
    {"k1": [1.0, 2.0]},
])
def test_device_validation_rejects(kwargs):
    with pytest.raises(ConfigError):
        sl.DeviceParams(**kwargs)


def test_effective_field_matches_tensor_form():
    rng = np.random.default_rng(11)
    for _ in range(50):
        p = sl.DeviceParams(k1=rng.standard_normal(3) * 0.01,
                            k2=rng.standard_normal(3) * 0.5)
        m = random_unit(rng)
        hext = rng.standard_normal(3) * 0.02
        want = p.k1 * m + p.k2 * m + hext
        got = sl.effective_field(m, p, h_ext=hext)
        assert np.allclose(got, want, rtol=1e-14, atol=1e-18)


def test_effective_field_default_device_frozen_value():
    m = sl.unit([0.3, -0.5, 0.8])
    h = sl.effective_field(m, sl.DeviceParams())
    assert np.allclose(h, [3.93959492375362e-4, 0.0, -0.8081220356417687],
                       rtol=1e-13)


def test_effective_field_accepts_non_unit_m():
    # field is linear in m; integrator predictor states sit slightly
    # off the sphere and must still be evaluable
    p = sl.DeviceParams()
    h = sl.effective_field([0.6, 0.0, 0.0], p)
    assert np.allclose(h, 2.0 * np.asarray(sl.effective_field([0.3, 0.0, 0.0], p)))


def test_stt_prefactor_frozen_value():
    p = sl.DeviceParams(alpha=0.01)
    beta = sl.spin_torque_prefactor(1.0e-3, p)
    assert math.isclose(beta, 0.008162350651632039, rel_tol=1e-14)


def test_stt_prefactor_scalings():
    p = sl.DeviceParams()
    b1 = sl.spin_torque_prefactor(1.0e-3, p)
    assert math.isclose(sl.spin_torque_prefactor(2.0e-3, p), 2.0 * b1,
                        rel_tol=1e-15)
    big = sl.DeviceParams(volume=2.0 * p.volume)
    assert math.isclose(sl.spin_torque_prefactor(1.0e-3, big), 0.5 * b1,
                        rel_tol=1e-15)
    # beta * epsilon per ampere holds the same information
    assert math.isclose(stt_coefficient(p) * 1.0e-3, b1 * p.epsilon,
                        rel_tol=1e-15)


def test_rhs_is_orthogonal_to_m():
    """dm/dt never changes |m|: m . dm/dt = 0 to rounding."""
    rng = np.random.default_rng(7)
    p = sl.DeviceParams()
    for _ in range(1000):
        m = random_unit(rng)
        h = rng.standard_normal(3) * 0.5
        beta = rng.uniform(0.0, 0.02)
        d = sl.llgs_rhs(m, h, beta, p)
        assert abs(float(np.dot(m, d))) <= 1e-12 * np.linalg.norm(d) + 1e-30


def _implicit_drive(m, h, beta, p):
    # precession plus in-plane torque; the implicit form hides damping
    # inside an m x dm/dt term
    return (-p.gamma * np.cross(m, h)
            + p.gamma * beta * p.epsilon * np.cross(m, np.cross(p.m_p, m)))


def test_explicit_rhs_solves_implicit_equation():
    """The explicit RHS satisfies d = P + alpha m x d exactly."""
    rng = np.random.default_rng(13)
    for _ in range(1000):
        p = sl.DeviceParams(alpha=float(rng.uniform(0.005, 0.9)))
        m = random_unit(rng)
        h = rng.standard_normal(3) * 0.5
        beta = float(rng.uniform(0.0, 0.02))
        d = sl.llgs_rhs(m, h, beta, p)
        residual = d - (_implicit_drive(m, h, beta, p)
                        + p.alpha * np.cross(m, d))
        assert np.linalg.norm(residual) <= 1e-10 * max(np.linalg.norm(d), 1.0)


def test_implicit_fixed_point_iteration_converges_to_rhs():
    # the map d -> P + alpha m x d is a contraction for alpha < 1
    rng = np.random.default_rng(17)
    p = sl.DeviceParams(alpha=0.5)
    for _ in range(50):
        m = random_unit(rng)
        h = rng.standard_normal(3) * 0.3
        beta = float(rng.uniform(0.0, 0.02))
        drive = _implicit_drive(m, h, beta, p)
        d = np.zeros(3)
        for _ in range(200):
            d = drive + p.alpha * np.cross(m, d)
        want = sl.llgs_rhs(m, h, beta, p)
        assert np.allclose(d, want, rtol=1e-10, atol=1e-10 * np.linalg.norm(want))


def test_resistance_endpoints_and_bounds():
    p = sl.DeviceParams()
    assert math.isclose(sl.mtj_resistance(p.m_p, p), p.r_p, rel_tol=1e-15)
    assert math.isclose(sl.mtj_resistance(-p.m_p, p), p.r_ap, rel_tol=1e-15)
    perp = sl.unit(np.cross(p.m_p, [1.0, 0.0, 0.0]))
    assert math.isclose(sl.mtj_resistance(perp, p), p.r_av, rel_tol=1e-15)
    rng = np.random.default_rng(3)
    for _ in range(200):
        r = sl.mtj_resistance(random_unit(rng), p)
        assert p.r_p - 1e-9 <= r <= p.r_ap + 1e-9


def test_resistance_frozen_value():
    r = sl.mtj_resistance(sl.unit([0.3, -0.5, 0.8]), sl.DeviceParams())
    assert math.isclose(r, 297.96949108955783, rel_tol=1e-13)
