"""stolab: spin-torque oscillator networks as self-oscillating RF mixers."""

__version__ = "0.1.0"

from .device import (DeviceParams, effective_field, llgs_rhs, mtj_resistance,
                     spin_torque_prefactor, unit)
from .errors import (AnalysisError, ConfigError, NoSidebandError,
                     SimulationError, StolabError)
from .network import (HighPassState, NetworkConfig, RFTone, coupling_currents,
                      default_initial_m, highpass_step, rf_current,
                      simulate_network)
from .stepping import (StepperConfig, ThermalNoiseSpec, TraceSet,
                       run_trajectory, step_heun, step_rk4, thermal_sigma)
from .spectral import (InstantaneousPhase, LinewidthEstimate, PhaseNoiseCurve,
                       Spectrum, band_power, dbm_to_watt, find_carrier,
                       instantaneous_phase, linewidth, phase_noise,
                       phase_noise_slope, watt_to_dbm, welch_psd)
from .mixer import (Iip3Result, LockResult, MixerPoint, MixerReport,
                    SweepSpec, VolumeLockResult, conversion_gain,
                    iip3_extrapolate, iip3_from_points, input_power,
                    local_noise_floor, lock_detector, measure_mixer_point,
                    mixer_sweep, network_lock_verdict, p1db_from_points,
                    p1db_sweep, sideband_power, third_order_power,
                    volume_lock_study)
from .config import ExperimentConfig, emit_config, parse_config
from .runner import RunManifest, run_experiment
from . import presets
