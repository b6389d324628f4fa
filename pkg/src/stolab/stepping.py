"""Time integration: thermal field statistics, single steps, trajectories.

The stochastic scheme is a Stratonovich-consistent Heun predictor-
corrector: one thermal field sample per step enters the effective field
of both stages. The deterministic scheme is classical RK4 and refuses
to run with thermal noise. All stochastic draws come from
numpy.random.Generator streams derived from (master_seed, stream_id),
so every result is reproducible bit for bit.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .constants import K_B
from .device import DeviceParams, check_magnetization, stt_coefficient, _vec3
from .errors import ConfigError, SimulationError

__all__ = [
    "ThermalNoiseSpec",
    "StepperConfig",
    "TraceSet",
    "thermal_sigma",
    "step_heun",
    "step_rk4",
    "run_trajectory",
]

# fixed chunk length for noise generation and kernel calls; constant so a
# given (duration, seed) always sees the same draw partitioning
CHUNK = 16384

_SCHEMES = ("heun", "rk4")


def thermal_sigma(p: DeviceParams, dt: float) -> float:
    """Std dev [T] of each Cartesian thermal-field component per step.

    sigma = sqrt(2 alpha k_B T / (gamma ms V dt)). The scaling follows
    the fluctuation-dissipation balance for the explicit-form equation
    of motion, which the equilibrium-statistics tests check empirically.
    """
    if dt <= 0.0:
        raise ConfigError(f"dt must be > 0, got {dt}")
    if p.temperature == 0.0:
        return 0.0
    return math.sqrt(2.0 * p.alpha * K_B * p.temperature /
                     (p.gamma * p.ms * p.volume * dt))


@dataclass
class ThermalNoiseSpec:
    """Per-oscillator thermal noise configuration.

    sigma_per_component is the per-step field std dev [T];
    rng_stream_id selects the oscillator's independent stream.
    """

    enabled: bool = True
    sigma_per_component: float = 0.0
    rng_stream_id: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.sigma_per_component) and self.sigma_per_component >= 0.0):
            raise ConfigError(
                f"sigma_per_component must be finite and >= 0, got {self.sigma_per_component}")

    @classmethod
    def for_device(cls, p: DeviceParams, dt: float, stream_id: int = 0) -> "ThermalNoiseSpec":
        return cls(enabled=p.temperature > 0.0,
                   sigma_per_component=thermal_sigma(p, dt),
                   rng_stream_id=stream_id)


@dataclass
class StepperConfig:
    """dt [s], scheme ('heun' or 'rk4') and per-step renormalization."""

    dt: float = 1e-12
    scheme: str = "heun"
    renormalize: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise ConfigError(f"stepper.dt must be finite and > 0, got {self.dt}")
        if self.scheme not in _SCHEMES:
            raise ConfigError(f"stepper.scheme must be one of {_SCHEMES}, got {self.scheme!r}")


@dataclass
class TraceSet:
    """Sampled time-domain channels for N oscillators.

    m: (N, K, 3) unit magnetization; resistance: (N, K) [ohm];
    voltage: (N, K) [V]; injected_current: (N, K) [A] (tone plus
    coupling current; zero for plain trajectories). Samples are spaced
    1/sample_rate apart starting at t0.
    """

    sample_rate: float
    t0: float
    m: np.ndarray
    resistance: np.ndarray
    voltage: np.ndarray
    injected_current: np.ndarray

    @property
    def n_oscillators(self) -> int:
        return self.m.shape[0]

    @property
    def n_samples(self) -> int:
        return self.m.shape[1]

    def time(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_samples) / self.sample_rate


def _stream(master_seed: int, stream_id: int) -> np.random.Generator:
    """Independent generator for (master_seed, stream_id)."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(stream_id,))
    return np.random.Generator(np.random.PCG64(ss))


def _draw_noise(rng: np.random.Generator, n: int, sigma: float, enabled: bool) -> np.ndarray:
    """(n, 3) thermal field samples [T]; zeros (no draws) when disabled."""
    if enabled and sigma > 0.0:
        return rng.standard_normal((n, 3)) * sigma
    return np.zeros((n, 3))


def step_heun(state, h_det, beta: float, p: DeviceParams,
              noise: ThermalNoiseSpec, cfg: StepperConfig,
              rng: np.random.Generator, t: float = 0.0) -> np.ndarray:
    """One stochastic Heun step from state at time t.

    h_det(m, t) must return the deterministic effective field [T]. The
    same thermal sample is used in predictor and corrector.
    """
    m = check_magnetization(state)
    if noise.enabled and noise.sigma_per_component > 0.0:
        b = rng.standard_normal(3) * noise.sigma_per_component
    else:
        b = np.zeros(3)
    be = beta * p.epsilon
    dt = cfg.dt

    h1 = _vec3(h_det(m, t), "h_det(m, t)") + b
    ax, ay, az = _kernels.rhs_core(m[0], m[1], m[2], h1[0], h1[1], h1[2],
                                   p.m_p[0], p.m_p[1], p.m_p[2],
                                   p.alpha, p.gamma, be)
    qx = m[0] + dt * ax
    qy = m[1] + dt * ay
    qz = m[2] + dt * az
    h2 = _vec3(h_det(np.array([qx, qy, qz]), t + dt), "h_det(m, t)") + b
    cx, cy, cz = _kernels.rhs_core(qx, qy, qz, h2[0], h2[1], h2[2],
                                   p.m_p[0], p.m_p[1], p.m_p[2],
                                   p.alpha, p.gamma, be)
    nx = m[0] + 0.5 * dt * (ax + cx)
    ny = m[1] + 0.5 * dt * (ay + cy)
    nz = m[2] + 0.5 * dt * (az + cz)
    if cfg.renormalize:
        nx, ny, nz = _kernels.normalize_core(nx, ny, nz)
    return np.array([nx, ny, nz])


def step_rk4(state, h_det, beta: float, p: DeviceParams,
             cfg: StepperConfig, t: float = 0.0) -> np.ndarray:
    """One classical 4th-order step (deterministic dynamics only)."""
    m = check_magnetization(state)
    be = beta * p.epsilon
    dt = cfg.dt

    def rhs_at(x, y, z, tt):
        h = _vec3(h_det(np.array([x, y, z]), tt), "h_det(m, t)")
        return _kernels.rhs_core(x, y, z, h[0], h[1], h[2],
                                 p.m_p[0], p.m_p[1], p.m_p[2],
                                 p.alpha, p.gamma, be)

    ax, ay, az = rhs_at(m[0], m[1], m[2], t)
    bx, by, bz = rhs_at(m[0] + 0.5 * dt * ax, m[1] + 0.5 * dt * ay,
                        m[2] + 0.5 * dt * az, t + 0.5 * dt)
    cx, cy, cz = rhs_at(m[0] + 0.5 * dt * bx, m[1] + 0.5 * dt * by,
                        m[2] + 0.5 * dt * bz, t + 0.5 * dt)
    dx, dy, dz = rhs_at(m[0] + dt * cx, m[1] + dt * cy, m[2] + dt * cz, t + dt)

    nx = m[0] + dt / 6.0 * (ax + 2.0 * bx + 2.0 * cx + dx)
    ny = m[1] + dt / 6.0 * (ay + 2.0 * by + 2.0 * cy + dy)
    nz = m[2] + dt / 6.0 * (az + 2.0 * bz + 2.0 * cz + dz)
    if cfg.renormalize:
        nx, ny, nz = _kernels.normalize_core(nx, ny, nz)
    return np.array([nx, ny, nz])


def _sample_counts(duration: float, dt: float, stride: int):
    if duration < dt:
        raise ConfigError(f"duration must be >= dt, got duration={duration}, dt={dt}")
    if stride < 1:
        raise ConfigError(f"sample_stride must be >= 1, got {stride}")
    n_samples = int(math.floor(duration / (dt * stride) + 1e-9)) + 1
    s_last = (n_samples - 1) * stride
    return n_samples, s_last


def run_trajectory(initial_m, drive, p: DeviceParams, cfg: StepperConfig,
                   duration: float, *, h_ext=None, sample_stride: int = 1,
                   master_seed: int = 0, stream_id: int = 0) -> TraceSet:
    """Integrate one oscillator for `duration` seconds and sample it.

    drive is the total instantaneous current [A]: either a number or a
    callable mapping an array of times [s] to currents. The current is
    held constant within each step (evaluated at the step start). The
    sample count is floor(duration / (dt * stride)) + 1, and the
    injected_current channel of a plain trajectory is zero (the drive
    decomposition is the caller's business; total current = v / R).
    """
    m0 = check_magnetization(initial_m)
    noise = ThermalNoiseSpec.for_device(p, cfg.dt, stream_id)
    if cfg.scheme == "rk4" and noise.enabled:
        raise ConfigError("rk4 scheme requires temperature = 0 (deterministic only)")
    n_samples, s_last = _sample_counts(duration, cfg.dt, sample_stride)

    hext = np.zeros(3) if h_ext is None else _vec3(h_ext, "h_ext")
    out_m = np.empty((n_samples, 3))
    out_r = np.empty(n_samples)
    out_v = np.empty(n_samples)
    out_i = np.empty(n_samples)

    m = m0.copy()
    rng = _stream(master_seed, stream_id)
    use_rk4 = cfg.scheme == "rk4"
    drive_fn = drive if callable(drive) else None
    drive_const = 0.0 if callable(drive) else float(drive)

    for s0 in range(0, s_last + 1, CHUNK):
        n_chunk = min(CHUNK, s_last + 1 - s0)
        if drive_fn is None:
            i_arr = np.full(n_chunk, drive_const)
        else:
            times = (s0 + np.arange(n_chunk)) * cfg.dt
            i_arr = np.broadcast_to(np.asarray(drive_fn(times), dtype=np.float64),
                                    (n_chunk,)).copy()
            if not np.all(np.isfinite(i_arr)):
                raise SimulationError("drive returned non-finite current")
        b = _draw_noise(rng, n_chunk, noise.sigma_per_component, noise.enabled)
        bad = _kernels.trajectory_chunk(
            m, p.k1, p.k2, hext, p.m_p,
            p.alpha, p.gamma, stt_coefficient(p), p.r_av, 0.5 * p.dr,
            i_arr, b, cfg.dt,
            s0, n_chunk, s_last, sample_stride, use_rk4, cfg.renormalize,
            out_m, out_r, out_v, out_i)
        if bad >= 0:
            raise SimulationError(f"non-finite magnetization at step {bad}")

    return TraceSet(sample_rate=1.0 / (cfg.dt * sample_stride), t0=0.0,
                    m=out_m[np.newaxis], resistance=out_r[np.newaxis],
                    voltage=out_v[np.newaxis], injected_current=out_i[np.newaxis])
