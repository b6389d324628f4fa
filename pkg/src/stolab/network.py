"""Coupled oscillator networks with a behavioral feedback path.

Each oscillator's voltage v = i_total * R(m) is AC-coupled through a
discrete single-pole high-pass (the series capacitor), scaled by a
transconductance g_m, and injected as current into every other
oscillator (global topology). Coupling is one-step delayed: currents at
step n are formed from voltages of step n-1, which keeps the update
causal and order-independent.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .constants import TWO_PI
from .device import DeviceParams, check_magnetization, stt_coefficient, unit
from .errors import ConfigError, SimulationError
from .stepping import (CHUNK, StepperConfig, ThermalNoiseSpec, TraceSet,
                       _draw_noise, _sample_counts, _stream)

__all__ = [
    "RFTone",
    "HighPassState",
    "NetworkConfig",
    "highpass_step",
    "coupling_currents",
    "rf_current",
    "simulate_network",
    "default_initial_m",
]

_TOPOLOGIES = ("none", "global")


@dataclass
class RFTone:
    """One injected current tone: A sin(2 pi f t + phase) into `target`."""

    amplitude: float
    frequency: float
    phase: float = 0.0
    target: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.amplitude) and self.amplitude >= 0.0):
            raise ConfigError(f"tone amplitude must be finite and >= 0, got {self.amplitude}")
        if not (np.isfinite(self.frequency) and self.frequency > 0.0):
            raise ConfigError(f"tone frequency must be > 0, got {self.frequency}")
        if not np.isfinite(self.phase):
            raise ConfigError("tone phase must be finite")
        if self.target < 0:
            raise ConfigError(f"tone target must be >= 0, got {self.target}")


@dataclass
class HighPassState:
    """Previous input/output of one discrete high-pass section."""

    x_prev: float = 0.0
    y_prev: float = 0.0


def highpass_step(state: HighPassState, x: float, f_c: float, dt: float):
    """Advance the high-pass by one sample; returns (y, new_state).

    y[n] = a (y[n-1] + x[n] - x[n-1]) with a = 1 / (1 + 2 pi f_c dt).
    """
    if f_c <= 0.0 or dt <= 0.0:
        raise ConfigError("highpass_step requires f_c > 0 and dt > 0")
    a = 1.0 / (1.0 + TWO_PI * f_c * dt)
    y = _kernels.highpass_core(state.x_prev, state.y_prev, x, a)
    return y, HighPassState(x_prev=x, y_prev=y)


def coupling_currents(v_filtered, g_m: float, topology: str = "global") -> np.ndarray:
    """Injected currents i_j = g_m * sum_{i != j} v_filtered[i] [A]."""
    v = np.asarray(v_filtered, dtype=np.float64)
    if topology not in _TOPOLOGIES:
        raise ConfigError(f"topology must be one of {_TOPOLOGIES}, got {topology!r}")
    n = v.shape[0]
    out = np.zeros(n)
    if topology == "none" or g_m == 0.0:
        return out
    for j in range(n):
        acc = 0.0
        for l in range(n):
            if l != j:
                acc += v[l]
        out[j] = g_m * acc
    return out


def rf_current(t: float, tones, n_oscillators: int) -> np.ndarray:
    """Summed tone currents [A] per oscillator at time t."""
    out = np.zeros(n_oscillators)
    for tone in tones:
        out[tone.target] += tone.amplitude * math.sin(
            TWO_PI * tone.frequency * t + tone.phase)
    return out


def default_initial_m(n: int) -> np.ndarray:
    """Staggered near-easy-axis initial states, distinct per oscillator.

    Identical devices started identically would stay identical forever
    at zero temperature, so the default spreads the in-plane phases.
    """
    out = np.empty((n, 3))
    for j in range(n):
        ang = 0.4 * j
        out[j] = unit([math.cos(ang), math.sin(ang), 0.05])
    return out


@dataclass
class NetworkConfig:
    """N oscillators plus the feedback path that couples them.

    i_dc: scalar or per-oscillator DC bias currents [A]. topology
    'none' disables coupling entirely (identical to g_m = 0).
    """

    oscillators: list
    g_m: float = 0.0
    topology: str = "global"
    hp_cutoff: float = 9e6
    i_dc: object = 0.0
    rf_tones: list = field(default_factory=list)
    initial_m: object = None

    def __post_init__(self):
        if len(self.oscillators) == 0:
            raise ConfigError("oscillators must be non-empty")
        for j, p in enumerate(self.oscillators):
            if not isinstance(p, DeviceParams):
                raise ConfigError(f"oscillators[{j}] must be a DeviceParams")
        if not (np.isfinite(self.g_m) and self.g_m >= 0.0):
            raise ConfigError(f"g_m must be finite and >= 0, got {self.g_m}")
        if self.topology not in _TOPOLOGIES:
            raise ConfigError(f"topology must be one of {_TOPOLOGIES}, got {self.topology!r}")
        # the voltage -> current -> voltage feedback path is linear, so the
        # all-to-all loop gain g_m * R * (N - 1) must stay below unity or
        # the injected current grows without bound
        n_osc = len(self.oscillators)
        if self.topology == "global" and self.g_m > 0.0 and n_osc > 1:
            r_max = max(p.r_ap for p in self.oscillators)
            loop_gain = self.g_m * r_max * (n_osc - 1)
            if loop_gain >= 1.0:
                raise ConfigError(
                    "unstable feedback: g_m * max(r_ap) * (N - 1) = "
                    f"{loop_gain:.3g} >= 1; reduce g_m below "
                    f"{1.0 / (r_max * (n_osc - 1)):.3g} S")
        if not (np.isfinite(self.hp_cutoff) and self.hp_cutoff > 0.0):
            raise ConfigError(f"hp_cutoff must be > 0, got {self.hp_cutoff}")
        n = len(self.oscillators)
        self.i_dc = np.broadcast_to(
            np.asarray(self.i_dc, dtype=np.float64), (n,)).copy()
        if not np.all(np.isfinite(self.i_dc)):
            raise ConfigError("i_dc must be finite")
        for k, tone in enumerate(self.rf_tones):
            if not isinstance(tone, RFTone):
                raise ConfigError(f"rf_tones[{k}] must be an RFTone")
            if tone.target >= n:
                raise ConfigError(
                    f"rf_tones[{k}].target = {tone.target} out of range for {n} oscillators")
        if self.initial_m is not None:
            m = np.asarray(self.initial_m, dtype=np.float64)
            if m.shape != (n, 3):
                raise ConfigError(
                    f"initial_m must have shape ({n}, 3), got {m.shape}")
            for j in range(n):
                check_magnetization(m[j])
            self.initial_m = m

    @property
    def n_oscillators(self) -> int:
        return len(self.oscillators)


def simulate_network(net: NetworkConfig, cfg: StepperConfig, duration: float,
                     *, sample_stride: int = 1, master_seed: int = 0,
                     h_ext=None) -> TraceSet:
    """Co-integrate the network for `duration` seconds and sample it.

    Oscillator j draws thermal noise from the stream (master_seed, j),
    so an uncoupled network decomposes exactly into independent
    single-oscillator runs with matching stream ids.
    """
    n = net.n_oscillators
    devs = net.oscillators
    noise_specs = [ThermalNoiseSpec.for_device(p, cfg.dt, j) for j, p in enumerate(devs)]
    if cfg.scheme == "rk4" and any(s.enabled for s in noise_specs):
        raise ConfigError("rk4 scheme requires temperature = 0 (deterministic only)")
    n_samples, s_last = _sample_counts(duration, cfg.dt, sample_stride)

    m = (net.initial_m.copy() if net.initial_m is not None else default_initial_m(n))
    k1 = np.stack([p.k1 for p in devs])
    k2 = np.stack([p.k2 for p in devs])
    mp = np.stack([p.m_p for p in devs])
    if h_ext is None:
        hext = np.zeros((n, 3))
    else:
        hext = np.broadcast_to(np.asarray(h_ext, dtype=np.float64), (n, 3)).copy()
    alpha = np.array([p.alpha for p in devs])
    gamma = np.array([p.gamma for p in devs])
    sttc = np.array([stt_coefficient(p) for p in devs])
    r_av = np.array([p.r_av for p in devs])
    dr_half = np.array([0.5 * p.dr for p in devs])
    sigma = np.array([s.sigma_per_component for s in noise_specs])
    enabled = np.array([s.enabled for s in noise_specs])

    tone_amp = np.array([t.amplitude for t in net.rf_tones])
    tone_freq = np.array([t.frequency for t in net.rf_tones])
    tone_phase = np.array([t.phase for t in net.rf_tones])
    tone_target = np.array([t.target for t in net.rf_tones], dtype=np.int64)

    g_m_eff = net.g_m if net.topology == "global" else 0.0
    hp_a = 1.0 / (1.0 + TWO_PI * net.hp_cutoff * cfg.dt)
    use_rk4 = cfg.scheme == "rk4"

    # seed each filter with the t=0 DC voltage so startup injects no
    # artificial step through the coupling path
    hp_x = np.array([
        net.i_dc[j] * _kernels.resistance_core(
            float(np.dot(m[j], mp[j])), r_av[j], dr_half[j])
        for j in range(n)])
    hp_y = np.zeros(n)
    rngs = [_stream(master_seed, j) for j in range(n)]

    out_m = np.empty((n, n_samples, 3))
    out_r = np.empty((n, n_samples))
    out_v = np.empty((n, n_samples))
    out_i = np.empty((n, n_samples))

    for s0 in range(0, s_last + 1, CHUNK):
        n_chunk = min(CHUNK, s_last + 1 - s0)
        b = np.zeros((n_chunk, n, 3))
        for j in range(n):
            if enabled[j] and sigma[j] > 0.0:
                b[:, j, :] = _draw_noise(rngs[j], n_chunk, sigma[j], True)
        bad = _kernels.network_chunk(
            m, hp_x, hp_y, k1, k2, hext, mp,
            alpha, gamma, sttc, r_av, dr_half, net.i_dc,
            tone_amp, tone_freq, tone_phase, tone_target,
            g_m_eff, hp_a, cfg.dt, b,
            s0, n_chunk, s_last, sample_stride, use_rk4, cfg.renormalize,
            out_m, out_r, out_v, out_i)
        if bad >= 0:
            raise SimulationError(f"non-finite magnetization at step {bad}")

    return TraceSet(sample_rate=1.0 / (cfg.dt * sample_stride), t0=0.0,
                    m=out_m, resistance=out_r, voltage=out_v,
                    injected_current=out_i)
