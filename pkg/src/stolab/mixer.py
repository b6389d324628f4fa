"""Mixer characterization built on the network simulator and spectra.

The oscillator is operated as a self-oscillating mixer: an RF current
tone rides on the DC bias, the device's own precession acts as the
local oscillator, and conversion products appear at f_osc +- f_rf.
This module measures input power, sideband powers, conversion gain,
the 1 dB compression point, third-order intercept extrapolation, and
phase-lock verdicts for coupled arrays.

Powers are reported in dBm against the device's average resistance
unless another load is given.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .device import DeviceParams
from .errors import AnalysisError, NoSidebandError
from .network import NetworkConfig, RFTone, simulate_network
from .spectral import (Spectrum, band_power, find_carrier,
                       instantaneous_phase, watt_to_dbm, welch_psd)
from .stepping import StepperConfig, TraceSet

# carrier search window around the expected oscillation frequency
CARRIER_WINDOW = (0.6, 1.4)


def input_power(i_ac: float, r_av: float):
    """RF input power (i_ac/sqrt(2))^2 * r_av delivered by the drive tone.

    Returns (watt, dbm); zero current reports the -inf dBm floor.
    """
    if i_ac < 0.0:
        raise AnalysisError(f"i_ac must be >= 0, got {i_ac}")
    if not (r_av > 0.0):
        raise AnalysisError(f"r_av must be positive, got {r_av}")
    p = (i_ac / math.sqrt(2.0)) ** 2 * r_av
    return p, watt_to_dbm(p)


def segment_len_for(fs: float, f_rf: float, n_samples: int) -> int:
    """Smallest power-of-two segment giving resolution bw <= f_rf/30."""
    target = f_rf / 30.0
    nseg = 2 ** int(math.ceil(math.log2(1.5 * fs / target)))
    if nseg > n_samples:
        raise AnalysisError(
            f"measurement window of {n_samples} samples cannot reach the "
            f"required resolution bandwidth {target:g} Hz (needs {nseg}); "
            "increase measure_time")
    return nseg


def sideband_power(s: Spectrum, f_center: float, r_load: float):
    """Band power of the conversion product expected at f_center.

    The strongest bin within +-3 resolution bandwidths must clear the
    spectrum-wide median psd by 3 dB, otherwise the product is
    indistinguishable from the floor and NoSidebandError is raised.
    Returns (p_dbm, f_peak).
    """
    rbw = s.resolution_bw
    lo, hi = f_center - 3.0 * rbw, f_center + 3.0 * rbw
    mask = (s.frequencies >= lo) & (s.frequencies <= hi)
    if not np.any(mask):
        raise AnalysisError(
            f"sideband window [{lo:g}, {hi:g}] Hz outside the spectrum")
    idx = np.nonzero(mask)[0]
    k = int(idx[np.argmax(s.psd[idx])])
    peak = float(s.psd[k])
    floor = float(np.median(s.psd))
    if floor > 0.0 and peak < 2.0 * floor:
        raise NoSidebandError(
            f"no sideband at {f_center:g} Hz: peak psd {peak:.3e} is less "
            f"than 3 dB above the median {floor:.3e}")
    if peak <= 0.0:
        raise NoSidebandError(f"no power at all near {f_center:g} Hz")
    f_peak = float(s.frequencies[k])
    _, p_dbm = band_power(s, f_peak, 6.0 * rbw, r_load)
    return p_dbm, f_peak


def local_noise_floor(s: Spectrum, f_center: float, r_load: float,
                      inner: float = 6.0, outer: float = 30.0) -> float:
    """Median-psd noise power near f_center, as dBm in a 6-rbw band.

    The annulus excludes +-inner resolution bandwidths around the line
    and extends to +-outer; the median psd there is converted to the
    power a 6-rbw integration band would collect, directly comparable
    with sideband_power output.
    """
    rbw = s.resolution_bw
    d = np.abs(s.frequencies - f_center)
    mask = (d > inner * rbw) & (d <= outer * rbw)
    if not np.any(mask):
        raise AnalysisError("no bins available around the line for a floor estimate")
    med = float(np.median(s.psd[mask]))
    p = med * 6.0 * rbw / r_load
    return watt_to_dbm(p)


def conversion_gain(trace: TraceSet, f_osc: float, f_rf: float, p_in_dbm: float,
                    sideband: str = "lower", r_load: float = 0.0,
                    segment_len: int = 0, channel: int = 0,
                    check_parseval: bool = True) -> float:
    """Sideband power at f_osc -+ f_rf minus input power, in dB.

    The subtraction is plain dB arithmetic, so callers can reconstruct
    the sideband power exactly as p_in + gain.
    """
    if sideband not in ("lower", "upper"):
        raise AnalysisError(f"sideband must be 'lower' or 'upper', got {sideband!r}")
    if not (r_load > 0.0):
        raise AnalysisError("r_load must be positive")
    v = trace.voltage[channel]
    fs = trace.sample_rate
    if segment_len == 0:
        segment_len = segment_len_for(fs, f_rf, v.size)
    s = welch_psd(v, fs, segment_len, check_parseval=check_parseval)
    f_sb = f_osc - f_rf if sideband == "lower" else f_osc + f_rf
    p_sb, _ = sideband_power(s, f_sb, r_load)
    return p_sb - p_in_dbm


def third_order_power(trace: TraceSet, f_osc: float, f_rf: float,
                      r_load: float, segment_len: int = 0, channel: int = 0,
                      check_parseval: bool = True) -> float:
    """Band power of the third-order product at f_osc - 3 f_rf [dBm]."""
    if not (r_load > 0.0):
        raise AnalysisError("r_load must be positive")
    f3 = f_osc - 3.0 * f_rf
    if f3 <= 0.0:
        raise AnalysisError(
            f"third-order product frequency {f3:g} Hz is not positive; "
            "choose f_rf below f_osc/3")
    v = trace.voltage[channel]
    fs = trace.sample_rate
    if segment_len == 0:
        segment_len = segment_len_for(fs, f_rf, v.size)
    s = welch_psd(v, fs, segment_len, check_parseval=check_parseval)
    p_dbm, _ = sideband_power(s, f3, r_load)
    return p_dbm


def p1db_sweep(results) -> float | None:
    """Input-referred 1 dB compression point from (p_in, p_out) pairs.

    Fits the small-signal line p_out = p_in + G over points at least
    6 dB below the largest input (G as the median of p_out - p_in
    there, which ignores onset-of-compression bias in the region's top
    points), then interpolates where the measured curve falls 1.00 dB
    under that line. None when the deviation never reaches 1 dB.
    """
    pts = [(float(a), float(b)) for a, b in results]
    if len(pts) < 5:
        raise AnalysisError(f"p1db needs >= 5 sweep points, got {len(pts)}")
    p_in = np.array([a for a, _ in pts])
    p_out = np.array([b for _, b in pts])
    if np.any(np.diff(p_in) <= 0.0):
        raise AnalysisError("p_in grid must be strictly increasing")
    low = p_in <= p_in[-1] - 6.0
    if np.count_nonzero(low) < 2:
        raise AnalysisError(
            "no small-signal region: need >= 2 points at least 6 dB below "
            "the maximum input power")
    gain = float(np.median(p_out[low] - p_in[low]))
    deviation = (p_in + gain) - p_out
    for i in range(1, p_in.size):
        if deviation[i] >= 1.0:
            if deviation[i - 1] >= 1.0:
                # grid starts compressed; report the first point
                return float(p_in[i - 1])
            frac = (1.0 - deviation[i - 1]) / (deviation[i] - deviation[i - 1])
            return float(p_in[i - 1] + frac * (p_in[i] - p_in[i - 1]))
    return None


@dataclass(frozen=True)
class Iip3Result:
    """Third-order intercept from constrained-slope extrapolation.

    slope_fund and slope_third are the unconstrained fitted slopes,
    kept as diagnostics of whether the sweep sat in the cubic regime.
    """

    iip3_dbm: float
    oip3_dbm: float
    slope_fund: float
    slope_third: float


def iip3_extrapolate(fund, third) -> Iip3Result:
    """Intersect the slope-1 fundamental and slope-3 product lines.

    Both inputs are (p_in_dbm, p_out_dbm) lists taken in the low-power
    regime. Intercepts are least-squares with slopes pinned to 1 and 3;
    the free-slope fits must land in [0.7, 1.3] and [2.4, 3.6] or the
    sweep is rejected as outside the cubic regime.
    """
    f = [(float(a), float(b)) for a, b in fund]
    t = [(float(a), float(b)) for a, b in third]
    if len(f) < 3 or len(t) < 3:
        raise AnalysisError("iip3 needs >= 3 low-power points per curve")
    fx = np.array([a for a, _ in f])
    fy = np.array([b for _, b in f])
    tx = np.array([a for a, _ in t])
    ty = np.array([b for _, b in t])
    slope_f = float(np.polyfit(fx, fy, 1)[0])
    slope_t = float(np.polyfit(tx, ty, 1)[0])
    if not (0.7 <= slope_f <= 1.3):
        raise AnalysisError(
            f"non-cubic regime: fundamental slope {slope_f:.2f} outside "
            "[0.7, 1.3]; lower the input power range")
    if not (2.4 <= slope_t <= 3.6):
        raise AnalysisError(
            f"non-cubic regime: third-order slope {slope_t:.2f} outside "
            "[2.4, 3.6]; lower the input power range")
    b1 = float(np.mean(fy - fx))
    b3 = float(np.mean(ty - 3.0 * tx))
    iip3 = (b1 - b3) / 2.0
    oip3 = iip3 + b1
    return Iip3Result(iip3_dbm=iip3, oip3_dbm=oip3,
                      slope_fund=slope_f, slope_third=slope_t)


@dataclass(frozen=True)
class LockResult:
    """Pairwise phase-lock verdict with its underlying statistics."""

    verdict: str
    drift_rate: float
    residual_std: float


def lock_detector(phase_a, phase_b, fs: float, f_osc: float) -> LockResult:
    """Classify two common-reference phase series as locked or not.

    Both series must come from demodulation against the same reference
    frequency. Locked means the phase difference drifts slower than
    0.1% of the carrier and its residual scatter stays below pi/4.
    """
    a = np.asarray(phase_a, dtype=np.float64)
    b = np.asarray(phase_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise AnalysisError("phase series must be 1-d and equal length")
    if not (f_osc > 0.0):
        raise AnalysisError(f"f_osc must be positive, got {f_osc}")
    if a.size < 2 or a.size / fs < 100.0 / f_osc:
        raise AnalysisError("phase series must cover at least 100 carrier periods")
    d = a - b
    t = np.arange(d.size) / fs
    slope, intercept = np.polyfit(t, d, 1)
    resid = d - (slope * t + intercept)
    drift_limit = 2.0 * math.pi * 0.001 * f_osc
    locked = abs(slope) < drift_limit and float(np.std(resid)) < math.pi / 4.0
    return LockResult(verdict="locked" if locked else "unlocked",
                      drift_rate=float(slope),
                      residual_std=float(np.std(resid)))


@dataclass(frozen=True)
class VolumeLockResult:
    """Lock verdict of one volume point in a thermal-stability sweep."""

    volume: float
    verdict: str
    f_carrier: float
    pair_results: tuple


def network_lock_verdict(trace: TraceSet, settle_time: float,
                         f_hint: float = 0.0) -> tuple:
    """Pairwise lock analysis of a settled network trace.

    Demodulates every oscillator against the carrier of oscillator 0
    and runs the lock detector on each pair (0, j). Returns
    (verdict, f_carrier, pair_results) with verdict 'locked' when all
    pairs lock, 'unlocked' when none do, 'partial' otherwise.
    """
    n = trace.n_oscillators
    if n < 2:
        raise AnalysisError("lock analysis needs at least two oscillators")
    fs = trace.sample_rate
    h = int(settle_time * fs)
    v0 = trace.voltage[0, h:]
    nseg = 2 ** int(math.floor(math.log2(max(v0.size // 4, 2))))
    s = welch_psd(v0, fs, nseg, check_parseval=False)
    if f_hint > 0.0:
        f_lo, f_hi = CARRIER_WINDOW[0] * f_hint, CARRIER_WINDOW[1] * f_hint
    else:
        f_lo, f_hi = 10.0 * s.resolution_bw, 0.98 * s.frequencies[-1]
    f0, _ = find_carrier(s, f_lo, f_hi)
    phases = [instantaneous_phase(trace.voltage[j, h:], fs, f0).phase
              for j in range(n)]
    pairs = []
    for j in range(1, n):
        pairs.append(lock_detector(phases[0], phases[j], fs, f0))
    n_locked = sum(1 for r in pairs if r.verdict == "locked")
    if n_locked == len(pairs):
        verdict = "locked"
    elif n_locked == 0:
        verdict = "unlocked"
    else:
        verdict = "partial"
    return verdict, f0, tuple(pairs)


def volume_lock_study(base_net: NetworkConfig, volumes, stepper: StepperConfig,
                      duration: float, *, settle_time: float = 0.0,
                      master_seed: int = 0, sample_stride: int = 16,
                      f_hint: float = 0.0):
    """Lock verdict versus free-layer volume at fixed working point.

    Each volume rescales every oscillator's bias current by the same
    factor as its volume, holding the spin-torque working point fixed
    so only the thermal field variance (inversely proportional to
    volume) changes across the sweep.
    """
    vols = [float(v) for v in volumes]
    if len(vols) < 2:
        raise AnalysisError("volume study needs at least two volumes")
    if settle_time <= 0.0:
        settle_time = 0.2 * duration
    results = []
    for v in vols:
        devs = [replace(p, volume=v) for p in base_net.oscillators]
        scale = np.array([v / p.volume for p in base_net.oscillators])
        net = NetworkConfig(
            oscillators=devs, g_m=base_net.g_m, topology=base_net.topology,
            hp_cutoff=base_net.hp_cutoff, i_dc=base_net.i_dc * scale,
            rf_tones=list(base_net.rf_tones),
            initial_m=None if base_net.initial_m is None
            else base_net.initial_m.copy())
        trace = simulate_network(net, stepper, duration,
                                 sample_stride=sample_stride,
                                 master_seed=master_seed)
        verdict, f0, pairs = network_lock_verdict(trace, settle_time, f_hint)
        results.append(VolumeLockResult(volume=v, verdict=verdict,
                                        f_carrier=f0, pair_results=pairs))
    return results


@dataclass(frozen=True)
class MixerPoint:
    """Measured conversion products at one drive amplitude."""

    i_ac: float
    f_osc: float
    f_rf: float
    p_in_dbm: float
    p_carrier_dbm: float
    p_sideband_low_dbm: float
    p_sideband_high_dbm: float
    conversion_gain_db: float
    p_third_dbm: float | None = None


@dataclass(frozen=True)
class MixerReport:
    """Summary of a mixer characterization run.

    conversion_gain_db is exact dB arithmetic against the chosen
    sideband, and when both intercept figures exist the third-order
    intercept must sit above the compression point.
    """

    f_osc: float
    f_rf: float
    p_in_dbm: float
    p_sideband_low_dbm: float
    p_sideband_high_dbm: float
    conversion_gain_db: float
    sideband: str = "lower"
    p1db_in_dbm: float | None = None
    iip3_dbm: float | None = None
    oip3_dbm: float | None = None
    lock: str | None = None

    def __post_init__(self):
        chosen = (self.p_sideband_low_dbm if self.sideband == "lower"
                  else self.p_sideband_high_dbm)
        if self.conversion_gain_db + self.p_in_dbm != chosen:
            raise AnalysisError(
                "conversion_gain_db must equal the chosen sideband power "
                "minus p_in_dbm exactly")
        if self.iip3_dbm is not None and self.p1db_in_dbm is not None:
            if not (self.iip3_dbm > self.p1db_in_dbm):
                raise AnalysisError(
                    f"iip3 {self.iip3_dbm:.2f} dBm must exceed the 1 dB "
                    f"compression input {self.p1db_in_dbm:.2f} dBm")
        if self.lock not in (None, "locked", "unlocked", "partial"):
            raise AnalysisError(f"invalid lock verdict {self.lock!r}")


@dataclass(frozen=True)
class SweepSpec:
    """Drive-amplitude sweep plan for compression and intercept runs."""

    i_ac_grid: tuple
    f_rf: float
    settle_time: float
    measure_time: float
    seeds: tuple = (0,)

    def __post_init__(self):
        grid = tuple(float(a) for a in self.i_ac_grid)
        if len(grid) == 0:
            raise AnalysisError("i_ac_grid must be non-empty")
        if any(a <= 0.0 for a in grid) or any(
                b <= a for a, b in zip(grid, grid[1:])):
            raise AnalysisError("i_ac_grid must be positive and strictly increasing")
        if not (self.f_rf > 0.0):
            raise AnalysisError(f"f_rf must be positive, got {self.f_rf}")
        if not (self.settle_time > 0.0):
            raise AnalysisError("settle_time must be positive")
        if not (self.measure_time > 0.0):
            raise AnalysisError("measure_time must be positive")
        if len(self.seeds) == 0:
            raise AnalysisError("seeds must be non-empty")
        object.__setattr__(self, "i_ac_grid", grid)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


def measure_mixer_point(device: DeviceParams, i_dc: float, i_ac: float,
                        f_rf: float, stepper: StepperConfig,
                        settle_time: float, measure_time: float, *,
                        master_seed: int = 0, sample_stride: int = 16,
                        f_osc_hint: float = 0.0,
                        with_third: bool = True) -> MixerPoint:
    """Run one drive point and measure its conversion products.

    The oscillator is simulated for settle_time + measure_time with the
    RF tone applied throughout; only the settled tail is analyzed. The
    carrier is re-detected near f_osc_hint each run, so drive-induced
    frequency pulling does not misplace the sideband bands.
    """
    net = NetworkConfig(
        oscillators=[device], g_m=0.0, topology="none",
        i_dc=i_dc, rf_tones=[RFTone(amplitude=i_ac, frequency=f_rf)])
    trace = simulate_network(net, stepper, settle_time + measure_time,
                             sample_stride=sample_stride,
                             master_seed=master_seed)
    fs = trace.sample_rate
    h = int(settle_time * fs)
    v = trace.voltage[0, h:]
    nseg = segment_len_for(fs, f_rf, v.size)
    # thermal runs carry slow envelope dynamics that break the
    # stationarity premise of the variance identity
    check = device.temperature == 0.0
    s = welch_psd(v, fs, nseg, check_parseval=check)
    r_load = device.r_av
    hint = f_osc_hint if f_osc_hint > 0.0 else 0.9e9
    f0, _ = find_carrier(s, CARRIER_WINDOW[0] * hint, CARRIER_WINDOW[1] * hint)
    _, p_carrier = band_power(s, f0, 6.0 * s.resolution_bw, r_load)
    p_lo, _ = sideband_power(s, f0 - f_rf, r_load)
    p_hi, _ = sideband_power(s, f0 + f_rf, r_load)
    _, p_in = input_power(i_ac, r_load)
    p3 = None
    if with_third and f0 - 3.0 * f_rf > 0.0:
        try:
            p3, _ = sideband_power(s, f0 - 3.0 * f_rf, r_load)
        except NoSidebandError:
            p3 = None
    return MixerPoint(i_ac=i_ac, f_osc=f0, f_rf=f_rf, p_in_dbm=p_in,
                      p_carrier_dbm=p_carrier, p_sideband_low_dbm=p_lo,
                      p_sideband_high_dbm=p_hi,
                      conversion_gain_db=p_lo - p_in, p_third_dbm=p3)


def mixer_sweep(device: DeviceParams, i_dc: float, spec: SweepSpec,
                stepper: StepperConfig, *, threads: int = 1,
                sample_stride: int = 16, f_osc_hint: float = 0.0,
                with_third: bool = True):
    """Measure every drive amplitude in the sweep, optionally in parallel.

    Points are independent simulations; results come back ordered by
    grid index regardless of completion order. Multiple seeds per point
    are averaged in the linear power domain before conversion to dBm.
    """
    def one(i_ac: float) -> MixerPoint:
        per_seed = [
            measure_mixer_point(
                device, i_dc, i_ac, spec.f_rf, stepper,
                spec.settle_time, spec.measure_time,
                master_seed=seed, sample_stride=sample_stride,
                f_osc_hint=f_osc_hint, with_third=with_third)
            for seed in spec.seeds]
        if len(per_seed) == 1:
            return per_seed[0]
        return _average_points(per_seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, spec.i_ac_grid))
    return [one(a) for a in spec.i_ac_grid]


def _average_points(points):
    """Power-domain average of per-seed measurements at one drive."""

    def avg_dbm(values):
        present = [v for v in values if v is not None]
        if len(present) != len(values):
            return None
        return watt_to_dbm(float(np.mean([10.0 ** (v / 10.0) * 1e-3
                                          for v in present])))

    first = points[0]
    p_lo = avg_dbm([p.p_sideband_low_dbm for p in points])
    return MixerPoint(
        i_ac=first.i_ac,
        f_osc=float(np.mean([p.f_osc for p in points])),
        f_rf=first.f_rf,
        p_in_dbm=first.p_in_dbm,
        p_carrier_dbm=avg_dbm([p.p_carrier_dbm for p in points]),
        p_sideband_low_dbm=p_lo,
        p_sideband_high_dbm=avg_dbm([p.p_sideband_high_dbm for p in points]),
        conversion_gain_db=p_lo - first.p_in_dbm,
        p_third_dbm=avg_dbm([p.p_third_dbm for p in points]))


def p1db_from_points(points) -> float | None:
    """Compression point of a sweep's fundamental sideband curve."""
    return p1db_sweep([(p.p_in_dbm, p.p_sideband_low_dbm) for p in points])


def iip3_from_points(points, p1db_in: float | None = None,
                     margin_db: float = 5.0, n_points: int = 5) -> Iip3Result:
    """Intercept extrapolation from the low-power end of a sweep.

    Uses points with a detected third-order product that sit at least
    margin_db below the compression point when it is known, keeping
    only the strongest n_points of them: at very low drive the product
    sinks into the spectral leakage floor and would flatten the fitted
    slope.
    """
    usable = [p for p in points if p.p_third_dbm is not None]
    if p1db_in is not None:
        usable = [p for p in usable if p.p_in_dbm <= p1db_in - margin_db]
    usable = usable[-n_points:]
    if len(usable) < 3:
        raise AnalysisError(
            "fewer than 3 sweep points have a detectable third-order "
            "product in the low-power regime")
    fund = [(p.p_in_dbm, p.p_sideband_low_dbm) for p in usable]
    third = [(p.p_in_dbm, p.p_third_dbm) for p in usable]
    return iip3_extrapolate(fund, third)
