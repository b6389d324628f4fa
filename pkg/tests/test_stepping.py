"""Integrator unit tests: physics limits, convergence order, determinism."""

import math

import numpy as np
import pytest

import stolab as sl
from stolab.constants import TWO_PI
from stolab.errors import ConfigError, SimulationError
from stolab.stepping import ThermalNoiseSpec, _stream, thermal_sigma


def _no_anisotropy(**kwargs):
    return sl.DeviceParams(k1=[0.0, 0.0, 0.0], k2=[0.0, 0.0, 0.0],
                           temperature=0.0, **kwargs)


def test_larmor_frequency():
    """Free precession about a fixed field runs at gamma H / 2 pi."""
    h = 0.1
    p = _no_anisotropy(alpha=1e-8)
    cfg = sl.StepperConfig(dt=1e-12, scheme="heun")
    tr = sl.run_trajectory([1.0, 0.0, 0.0], 0.0, p, cfg, 2.0e-9,
                           h_ext=[0.0, 0.0, h])
    phase = np.unwrap(np.arctan2(tr.m[0, :, 1], tr.m[0, :, 0]))
    t = tr.time()
    omega = abs(np.polyfit(t, phase, 1)[0])
    f_larmor = p.gamma * h / TWO_PI
    assert abs(omega / TWO_PI - f_larmor) / f_larmor < 1e-3


def test_damping_relaxes_to_field_axis():
    p = _no_anisotropy(alpha=0.5)
    cfg = sl.StepperConfig(dt=1e-12)
    tr = sl.run_trajectory(sl.unit([1.0, 0.0, 1.0]), 0.0, p, cfg, 2.0e-9,
                           h_ext=[0.0, 0.0, 0.2], sample_stride=100)
    assert tr.m[0, -1, 2] > 0.99999
    # |m| preserved along the way
    norms = np.linalg.norm(tr.m[0], axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-12


_CONV_DEVICE = dict(alpha=0.1, temperature=0.0)
_CONV_M0 = (1.0, 0.0, 0.3)
_CONV_T = 2.0e-10


def _final_state(scheme: str, dt: float) -> np.ndarray:
    p = sl.DeviceParams(**_CONV_DEVICE)
    cfg = sl.StepperConfig(dt=dt, scheme=scheme, renormalize=False)
    n = int(round(_CONV_T / dt))
    tr = sl.run_trajectory(sl.unit(_CONV_M0), 2.2e-4, p, cfg, _CONV_T,
                           sample_stride=n)
    return tr.m[0, -1]


def test_rk4_fourth_order_self_convergence():
    """Richardson error ratio on dt halving is 16 within +-3."""
    base = 5e-13
    a, b, c = (_final_state("rk4", base / k) for k in (1, 2, 4))
    e1 = np.linalg.norm(a - b)
    e2 = np.linalg.norm(b - c)
    assert e2 > 1e-13  # still above rounding noise
    assert 13.0 < e1 / e2 < 19.0


def test_heun_second_order_on_deterministic_problem():
    base = 1e-12
    a, b, c = (_final_state("heun", base / k) for k in (1, 2, 4))
    ratio = np.linalg.norm(a - b) / np.linalg.norm(b - c)
    assert 3.2 < ratio < 5.2


def test_rk4_refuses_thermal_noise():
    p = sl.DeviceParams(temperature=300.0)
    cfg = sl.StepperConfig(scheme="rk4")
    with pytest.raises(ConfigError):
        sl.run_trajectory([1.0, 0.0, 0.0], 0.0, p, cfg, 1e-10)


def test_stepper_config_validation():
    with pytest.raises(ConfigError):
        sl.StepperConfig(dt=0.0)
    with pytest.raises(ConfigError):
        sl.StepperConfig(scheme="euler")


def test_duration_and_stride_validation():
    p = sl.DeviceParams(temperature=0.0)
    cfg = sl.StepperConfig()
    with pytest.raises(ConfigError):
        sl.run_trajectory([1.0, 0.0, 0.0], 0.0, p, cfg, 1e-13)
    with pytest.raises(ConfigError):
        sl.run_trajectory([1.0, 0.0, 0.0], 0.0, p, cfg, 1e-10, sample_stride=0)


def test_initial_state_must_be_unit():
    p = sl.DeviceParams(temperature=0.0)
    with pytest.raises(ConfigError):
        sl.run_trajectory([1.0, 1.0, 0.0], 0.0, p, sl.StepperConfig(), 1e-10)


def test_non_finite_state_raises_simulation_error():
    # absurd drive overflows the torque within the first steps
    p = sl.DeviceParams(temperature=0.0)
    with pytest.raises(SimulationError, match="non-finite"):
        sl.run_trajectory([1.0, 0.0, 0.0], 1e140, p, sl.StepperConfig(), 1e-11)


def test_non_finite_drive_raises_simulation_error():
    p = sl.DeviceParams(temperature=0.0)
    with pytest.raises(SimulationError, match="drive"):
        sl.run_trajectory([1.0, 0.0, 0.0], lambda t: np.full_like(t, np.inf),
                          p, sl.StepperConfig(), 1e-11)


def test_same_seed_reproduces_bitwise():
    p = sl.DeviceParams()
    cfg = sl.StepperConfig()
    a = sl.run_trajectory([1.0, 0.0, 0.0], 2.2e-4, p, cfg, 3e-10, master_seed=42)
    b = sl.run_trajectory([1.0, 0.0, 0.0], 2.2e-4, p, cfg, 3e-10, master_seed=42)
    assert np.array_equal(a.m, b.m)
    assert np.array_equal(a.voltage, b.voltage)


def test_different_seeds_differ():
    p = sl.DeviceParams()
    cfg = sl.StepperConfig()
    a = sl.run_trajectory([1.0, 0.0, 0.0], 2.2e-4, p, cfg, 3e-10, master_seed=1)
    b = sl.run_trajectory([1.0, 0.0, 0.0], 2.2e-4, p, cfg, 3e-10, master_seed=2)
    assert not np.array_equal(a.m, b.m)


def test_zero_temperature_ignores_seed():
    p = sl.DeviceParams(temperature=0.0)
    cfg = sl.StepperConfig()
    a = sl.run_trajectory([1.0, 0.0, 0.0], 2.2e-4, p, cfg, 3e-10, master_seed=1)
    b = sl.run_trajectory([1.0, 0.0, 0.0], 2.2e-4, p, cfg, 3e-10, master_seed=2)
    assert np.array_equal(a.m, b.m)


def test_callable_drive_matches_constant():
    p = sl.DeviceParams()
    cfg = sl.StepperConfig()
    a = sl.run_trajectory([1.0, 0.0, 0.0], 2.2e-4, p, cfg, 3e-10, master_seed=9)
    b = sl.run_trajectory([1.0, 0.0, 0.0], lambda t: np.full_like(t, 2.2e-4),
                          p, cfg, 3e-10, master_seed=9)
    assert np.array_equal(a.m, b.m)


def test_public_heun_step_matches_trajectory_kernel():
    """Python-level stepping and the compiled chunk agree bitwise."""
    p = sl.DeviceParams()
    cfg = sl.StepperConfig()
    noise = ThermalNoiseSpec.for_device(p, cfg.dt, 0)
    rng = _stream(5, 0)
    beta = sl.spin_torque_prefactor(2.2e-4, p)
    m = sl.default_initial_m(1)[0].copy()
    for _ in range(200):
        m = sl.step_heun(m, lambda mm, t: sl.effective_field(mm, p),
                         beta, p, noise, cfg, rng)
    tr = sl.run_trajectory(sl.default_initial_m(1)[0], 2.2e-4, p, cfg,
                           200e-12, sample_stride=200, master_seed=5)
    assert np.array_equal(m, tr.m[0, -1])


def test_public_rk4_step_matches_trajectory_kernel():
    p = sl.DeviceParams(temperature=0.0)
    cfg = sl.StepperConfig(scheme="rk4")
    beta = sl.spin_torque_prefactor(2.2e-4, p)
    m = sl.default_initial_m(1)[0].copy()
    for k in range(100):
        m = sl.step_rk4(m, lambda mm, t: sl.effective_field(mm, p),
                        beta, p, cfg, t=k * cfg.dt)
    tr = sl.run_trajectory(sl.default_initial_m(1)[0], 2.2e-4, p, cfg,
                           100e-12, sample_stride=100)
    assert np.array_equal(m, tr.m[0, -1])


def test_sample_grid_and_trace_shape():
    p = sl.DeviceParams(temperature=0.0)
    cfg = sl.StepperConfig(dt=1e-12)
    tr = sl.run_trajectory([1.0, 0.0, 0.0], 0.0, p, cfg, 1e-9, sample_stride=10)
    assert tr.n_samples == 101
    assert tr.n_oscillators == 1
    assert math.isclose(tr.sample_rate, 1e11, rel_tol=1e-15)
    t = tr.time()
    assert t[0] == 0.0
    assert math.isclose(t[-1], 1e-9, rel_tol=1e-12)
    assert np.all(tr.injected_current == 0.0)


def test_thermal_noise_spec_validation():
    with pytest.raises(ConfigError):
        ThermalNoiseSpec(sigma_per_component=-1.0)
    with pytest.raises(ConfigError):
        thermal_sigma(sl.DeviceParams(), 0.0)
