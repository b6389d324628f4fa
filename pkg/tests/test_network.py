"""Coupled-network tests: feedback path, topology, and reproducibility."""

import numpy as np
import pytest

import stolab as sl
from stolab.constants import TWO_PI
from stolab.errors import ConfigError
from stolab.network import coupling_currents, highpass_step


def _dev(**kw):
    base = dict(temperature=0.0)
    base.update(kw)
    return sl.DeviceParams(**base)


# ---------------------------------------------------------------------------
# high-pass filter primitive


def test_highpass_rejects_dc():
    # constant input: output decays geometrically to zero
    dt = 1e-12
    f_c = 9e6
    a = 1.0 / (1.0 + TWO_PI * f_c * dt)
    state = sl.HighPassState()
    outs = []
    for _ in range(50):
        y, state = highpass_step(state, 1.0, f_c, dt)
        outs.append(y)
    outs = np.asarray(outs)
    expected = a ** np.arange(1, 51)
    assert np.allclose(outs, expected, rtol=1e-12)
    assert outs[-1] < outs[0]


def test_highpass_gain_matches_transfer_function():
    # steady-state sine amplitude equals |H(e^{jw})| of the
    # backward-difference filter y[n] = a (y[n-1] + x[n] - x[n-1]);
    # amplitude read out by quadrature projection over whole periods so
    # the slow start-up transient does not bias it
    f_c = 9e6
    for f, dt in ((5e8, 1e-12), (2e9, 1e-12), (9e6, 1e-9)):
        a = 1.0 / (1.0 + TWO_PI * f_c * dt)
        w = TWO_PI * f * dt
        z = np.exp(1j * w)
        h = a * (1.0 - 1.0 / z) / (1.0 - a / z)
        per = int(round(1.0 / (f * dt)))
        n = 20 * per
        t = np.arange(n) * dt
        x = np.sin(TWO_PI * f * t)
        y = np.zeros(n)
        state = sl.HighPassState()
        for i in range(n):
            y[i], state = highpass_step(state, x[i], f_c, dt)
        tail = y[-10 * per :]
        phase = w * np.arange(n - 10 * per, n)
        amp = 2.0 / tail.size * abs(np.dot(tail, np.exp(-1j * phase)))
        assert amp == pytest.approx(abs(h), rel=1e-3)


def test_highpass_step_validation():
    with pytest.raises(ConfigError):
        highpass_step(sl.HighPassState(), 1.0, 0.0, 1e-12)
    with pytest.raises(ConfigError):
        highpass_step(sl.HighPassState(), 1.0, 9e6, 0.0)


# ---------------------------------------------------------------------------
# coupling map


def test_coupling_currents_all_to_all():
    y = np.array([5.0, 4.0, 3.0])
    inj = coupling_currents(y, g_m=1.0, topology="global")
    # each node receives the sum of the others
    assert np.allclose(inj, [7.0, 8.0, 9.0], rtol=0, atol=0)


def test_coupling_currents_scales_with_g_m():
    y = np.array([5.0, 4.0, 3.0])
    inj = coupling_currents(y, g_m=2.5e-4, topology="global")
    assert np.allclose(inj, 2.5e-4 * np.array([7.0, 8.0, 9.0]), rtol=1e-15)


def test_coupling_currents_none_topology_is_zero():
    y = np.array([5.0, 4.0, 3.0])
    assert np.all(coupling_currents(y, g_m=1.0, topology="none") == 0.0)
    assert np.all(coupling_currents(y, g_m=0.0, topology="global") == 0.0)


# ---------------------------------------------------------------------------
# config validation


def test_unstable_feedback_rejected():
    # loop gain g_m * r_ap * (N - 1) = 1e-3 * 750 * 2 = 1.5 >= 1
    with pytest.raises(ConfigError, match="unstable feedback"):
        sl.NetworkConfig(oscillators=[_dev()] * 3, g_m=1e-3, topology="global")


def test_stable_feedback_accepted():
    # 6e-4 * 750 * 2 = 0.9 < 1
    net = sl.NetworkConfig(oscillators=[_dev()] * 3, g_m=6e-4, topology="global")
    assert net.n_oscillators == 3


def test_rf_tone_validation():
    with pytest.raises(ConfigError):
        sl.RFTone(amplitude=-1e-6, frequency=1e8)
    with pytest.raises(ConfigError):
        sl.RFTone(amplitude=1e-6, frequency=0.0)
    with pytest.raises(ConfigError):
        sl.RFTone(amplitude=1e-6, frequency=1e8, target=-1)


def test_rf_tone_target_out_of_range():
    tone = sl.RFTone(amplitude=1e-6, frequency=1e8, target=5)
    with pytest.raises(ConfigError):
        sl.NetworkConfig(oscillators=[_dev()] * 2, rf_tones=[tone])


def test_network_rejects_rk4_with_noise():
    net = sl.NetworkConfig(oscillators=[sl.DeviceParams(temperature=300.0)])
    cfg = sl.StepperConfig(dt=1e-12, scheme="rk4")
    with pytest.raises(ConfigError):
        sl.simulate_network(net, cfg, 1e-10, sample_stride=1, master_seed=0)


def test_initial_m_shape_checked():
    with pytest.raises(ConfigError):
        sl.NetworkConfig(oscillators=[_dev()] * 2, initial_m=np.ones((3, 3)))


# ---------------------------------------------------------------------------
# feedback path semantics


def test_injected_current_replays_highpass_recursion():
    # reconstruct the injected currents from the recorded voltages using the
    # documented update order: injection from previous-step filter outputs,
    # filters seeded so the t=0 step sees no transient from the DC level
    dev = _dev()
    cfg = sl.StepperConfig(dt=1e-12)
    tone = sl.RFTone(amplitude=5e-6, frequency=3e8)
    net = sl.NetworkConfig(
        oscillators=[dev] * 2, g_m=1e-4, topology="global",
        hp_cutoff=9e6, i_dc=2.2e-4, rf_tones=[tone],
    )
    n_steps = 3000
    tr = sl.simulate_network(net, cfg, n_steps * cfg.dt, sample_stride=1, master_seed=0)
    v = tr.voltage
    a = 1.0 / (1.0 + TWO_PI * net.hp_cutoff * cfg.dt)
    m0 = sl.default_initial_m(2)
    x = np.array([net.i_dc[j] * sl.mtj_resistance(m0[j], dev) for j in range(2)])
    y = np.zeros(2)
    ref = np.zeros_like(v)
    for s in range(v.shape[1]):
        t = s * cfg.dt
        for j in range(2):
            acc = 0.0
            for l in range(2):
                if l != j:
                    acc += y[l]
            rf = tone.amplitude * np.sin(TWO_PI * tone.frequency * t) if j == 0 else 0.0
            ref[j, s] = net.g_m * acc + rf
        for j in range(2):
            y_new = a * (y[j] + v[j, s] - x[j])
            x[j] = v[j, s]
            y[j] = y_new
    assert np.array_equal(ref, tr.injected_current)


def test_rf_tone_reaches_only_its_target():
    dev = _dev()
    cfg = sl.StepperConfig(dt=1e-12)
    tone = sl.RFTone(amplitude=5e-6, frequency=3e8, target=0)
    net = sl.NetworkConfig(oscillators=[dev] * 2, g_m=0.0, rf_tones=[tone], i_dc=2.2e-4)
    tr = sl.simulate_network(net, cfg, 1e-9, sample_stride=1, master_seed=0)
    assert np.all(tr.injected_current[1] == 0.0)
    t = tr.time()
    want = tone.amplitude * np.sin(TWO_PI * tone.frequency * t)
    assert np.allclose(tr.injected_current[0], want, rtol=0, atol=1e-18)


def test_uncoupled_network_matches_single_trajectories():
    # g_m = 0 at finite temperature: oscillator j of the network is bitwise
    # identical to a lone run with the same master seed and stream id j
    dev = sl.DeviceParams(temperature=300.0)
    cfg = sl.StepperConfig(dt=1e-12)
    n = 3
    m0 = sl.default_initial_m(n)
    net = sl.NetworkConfig(oscillators=[dev] * n, g_m=0.0, i_dc=2.2e-4, initial_m=m0)
    tr = sl.simulate_network(net, cfg, 2e-9, sample_stride=1, master_seed=17)
    for j in range(n):
        solo = sl.run_trajectory(
            m0[j], 2.2e-4, dev, cfg, 2e-9,
            sample_stride=1, master_seed=17, stream_id=j,
        )
        assert np.array_equal(tr.m[j], solo.m[0])
        assert np.array_equal(tr.voltage[j], solo.voltage[0])


def test_permutation_equivariance():
    # relabeling oscillators permutes the outputs and nothing else (T = 0
    # so no RNG stream enters; two-term coupling sums are order independent)
    devs = [_dev(r_p=rp, r_ap=3 * rp) for rp in (240.0, 250.0, 260.0)]
    bias = (2.0e-4, 2.2e-4, 2.4e-4)
    m0 = sl.default_initial_m(3)
    cfg = sl.StepperConfig(dt=1e-12)
    perm = [2, 0, 1]
    net_a = sl.NetworkConfig(
        oscillators=devs, g_m=6e-4, topology="global", i_dc=bias, initial_m=m0
    )
    net_b = sl.NetworkConfig(
        oscillators=[devs[p] for p in perm], g_m=6e-4, topology="global",
        i_dc=tuple(bias[p] for p in perm), initial_m=m0[perm],
    )
    tr_a = sl.simulate_network(net_a, cfg, 2e-9, sample_stride=1, master_seed=0)
    tr_b = sl.simulate_network(net_b, cfg, 2e-9, sample_stride=1, master_seed=5)
    for k, p in enumerate(perm):
        assert np.array_equal(tr_b.m[k], tr_a.m[p])
        assert np.array_equal(tr_b.voltage[k], tr_a.voltage[p])


def test_identical_oscillators_stay_synchronized():
    # same device, same start, T = 0: the coupled network preserves the
    # exchange symmetry exactly
    dev = _dev()
    m0 = np.tile(sl.unit([1.0, 0.0, 0.05]), (3, 1))
    net = sl.NetworkConfig(
        oscillators=[dev] * 3, g_m=6e-4, topology="global", i_dc=2.2e-4, initial_m=m0
    )
    cfg = sl.StepperConfig(dt=1e-12)
    tr = sl.simulate_network(net, cfg, 5e-9, sample_stride=1, master_seed=0)
    assert np.array_equal(tr.voltage[0], tr.voltage[1])
    assert np.array_equal(tr.voltage[0], tr.voltage[2])
    assert np.array_equal(tr.m[0], tr.m[2])


def test_high_cutoff_suppresses_injection():
    # pushing the filter corner far above the signal band removes the
    # coupling drive
    dev = _dev()
    cfg = sl.StepperConfig(dt=1e-12)
    kw = dict(oscillators=[dev] * 3, g_m=6e-4, topology="global", i_dc=2.2e-4)
    lo = sl.simulate_network(
        sl.NetworkConfig(hp_cutoff=9e6, **kw), cfg, 50e-9, sample_stride=1, master_seed=0
    )
    hi = sl.simulate_network(
        sl.NetworkConfig(hp_cutoff=1e15, **kw), cfg, 50e-9, sample_stride=1, master_seed=0
    )
    a_lo = np.max(np.abs(lo.injected_current))
    a_hi = np.max(np.abs(hi.injected_current))
    assert a_lo > 0.0
    assert a_hi < 1e-2 * a_lo


def test_same_seed_reproduces_network():
    dev = sl.DeviceParams(temperature=300.0)
    net = sl.NetworkConfig(oscillators=[dev] * 2, g_m=6e-4, topology="global", i_dc=2.2e-4)
    cfg = sl.StepperConfig(dt=1e-12)
    tr1 = sl.simulate_network(net, cfg, 1e-9, sample_stride=1, master_seed=9)
    tr2 = sl.simulate_network(net, cfg, 1e-9, sample_stride=1, master_seed=9)
    tr3 = sl.simulate_network(net, cfg, 1e-9, sample_stride=1, master_seed=10)
    assert np.array_equal(tr1.m, tr2.m)
    assert np.array_equal(tr1.voltage, tr2.voltage)
    assert not np.array_equal(tr1.m, tr3.m)


def test_trace_shapes_and_grid():
    dev = _dev()
    net = sl.NetworkConfig(oscillators=[dev] * 2, i_dc=2.2e-4)
    cfg = sl.StepperConfig(dt=1e-12)
    tr = sl.simulate_network(net, cfg, 1e-9, sample_stride=10, master_seed=0)
    assert tr.n_oscillators == 2
    assert tr.m.shape == (2, tr.n_samples, 3)
    assert tr.voltage.shape == (2, tr.n_samples)
    assert tr.sample_rate == pytest.approx(1e11)
    t = tr.time()
    assert t[0] == 0.0
    assert t[-1] == pytest.approx(1e-9)
