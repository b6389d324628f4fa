"""Spectral measurements on oscillator voltage traces.

Everything downstream of the time-domain simulation lives here: Welch
power spectral density, carrier location, band power in dBm, linewidth
estimation, instantaneous phase extraction and the phase-noise curve
L(df) in dBc/Hz. All transforms are pure functions, safe to call in
parallel on distinct traces.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from .errors import AnalysisError

# dBm floor reported instead of -inf when a band holds zero power
DBM_FLOOR = float("-inf")
# dBc/Hz floor for empty phase-noise bins
L_FLOOR_DBC = -400.0


@dataclass(frozen=True)
class Spectrum:
    """Single-sided power spectral density on a uniform frequency grid.

    frequencies start at 0 and end at fs/2; psd is in V^2/Hz. The
    resolution bandwidth is the equivalent noise bandwidth of the
    window, not the bin spacing.
    """

    frequencies: np.ndarray
    psd: np.ndarray
    resolution_bw: float
    window: str = "hann"
    n_segments: int = 1

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=np.float64)
        p = np.asarray(self.psd, dtype=np.float64)
        if f.ndim != 1 or f.shape != p.shape or f.size < 2:
            raise AnalysisError("spectrum needs matching 1-d frequency and psd arrays")
        if f[0] != 0.0 or np.any(np.diff(f) <= 0.0):
            raise AnalysisError("frequencies must increase strictly from 0")
        if np.any(p < 0.0) or not np.all(np.isfinite(p)):
            raise AnalysisError("psd must be finite and non-negative")
        if not (self.resolution_bw > 0.0):
            raise AnalysisError("resolution_bw must be positive")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "psd", p)

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    @property
    def fs(self) -> float:
        return float(2.0 * self.frequencies[-1])

    def total_power(self) -> float:
        """Integral of the psd over the whole grid [V^2]."""
        return float(np.sum(self.psd) * self.bin_width)


@dataclass(frozen=True)
class PhaseNoiseCurve:
    """Single-sideband phase noise L(df) versus offset frequency."""

    offsets: np.ndarray
    l_dbc_per_hz: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.offsets, dtype=np.float64)
        l = np.asarray(self.l_dbc_per_hz, dtype=np.float64)
        if f.ndim != 1 or f.shape != l.shape or f.size == 0:
            raise AnalysisError("offsets and l_dbc_per_hz must be matching 1-d arrays")
        if f[0] <= 0.0 or np.any(np.diff(f) <= 0.0):
            raise AnalysisError("offsets must be positive and increasing")
        object.__setattr__(self, "offsets", f)
        object.__setattr__(self, "l_dbc_per_hz", l)

    def at(self, offset_hz: float) -> float:
        """L at the grid point nearest offset_hz [dBc/Hz]."""
        k = int(np.argmin(np.abs(self.offsets - offset_hz)))
        return float(self.l_dbc_per_hz[k])


@dataclass(frozen=True)
class LinewidthEstimate:
    """Full width at half maximum of a spectral line.

    method is 'lorentzian' when the least-squares fit converged and
    'half_power' for the interpolated -3 dB fallback. Lines not wider
    than twice the resolution bandwidth carry resolution_limited.
    """

    value_hz: float
    resolution_limited: bool
    method: str

    def __float__(self) -> float:
        return self.value_hz


@dataclass(frozen=True)
class InstantaneousPhase:
    """Unwrapped phase samples with an edge-validity mask."""

    phase: np.ndarray
    valid: np.ndarray
    f0: float
    fs: float

    def interior(self) -> np.ndarray:
        return self.phase[self.valid]


def welch_psd(series, fs: float, segment_len: int, overlap: float = 0.5,
              check_parseval: bool = True) -> Spectrum:
    """Averaged-periodogram PSD with a Hann window.

    Segments are mean-detrended before windowing, so the estimate
    describes fluctuations about the mean. The result is checked
    against the time-domain variance (1% tolerance) unless
    check_parseval is off; disable it for strongly nonstationary
    input where that identity does not apply.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise AnalysisError("series must be one-dimensional")
    if not (fs > 0.0) or not math.isfinite(fs):
        raise AnalysisError(f"fs must be positive, got {fs}")
    segment_len = int(segment_len)
    if segment_len < 8:
        raise AnalysisError(f"segment_len must be >= 8, got {segment_len}")
    if x.size < segment_len:
        raise AnalysisError(
            f"series of {x.size} samples is shorter than one segment ({segment_len})")
    if not (0.0 <= overlap < 1.0):
        raise AnalysisError(f"overlap must lie in [0, 1), got {overlap}")
    noverlap = int(round(segment_len * overlap))
    freqs, psd = signal.welch(
        x, fs=fs, window="hann", nperseg=segment_len, noverlap=noverlap,
        detrend="constant", scaling="density", return_onesided=True)
    step = segment_len - noverlap
    n_segments = 1 + (x.size - segment_len) // step
    # Hann equivalent noise bandwidth: 1.5 bins
    rbw = 1.5 * fs / segment_len
    spec = Spectrum(frequencies=freqs, psd=psd, resolution_bw=rbw,
                    window="hann", n_segments=int(n_segments))
    if check_parseval:
        var = float(np.var(x))
        tot = spec.total_power()
        if var == 0.0:
            if tot != 0.0:
                raise AnalysisError("zero-variance series produced nonzero psd")
        else:
            err = abs(tot - var) / var
            if err > 0.01:
                raise AnalysisError(
                    f"psd power {tot:.6e} deviates from series variance "
                    f"{var:.6e} by {100 * err:.2f}% (>1%)")
    return spec


def watt_to_dbm(p_watt: float) -> float:
    if p_watt <= 0.0:
        return DBM_FLOOR
    return 10.0 * math.log10(p_watt / 1e-3)


def dbm_to_watt(p_dbm: float) -> float:
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def band_power(s: Spectrum, f0: float, bw: float, r_load: float):
    """Power dissipated in r_load by the band f0 +- bw/2.

    Returns (watt, dbm). A band holding zero power reports the
    distinguished -inf dBm floor.
    """
    if not (r_load > 0.0):
        raise AnalysisError(f"r_load must be positive, got {r_load}")
    if bw < s.resolution_bw:
        raise AnalysisError(
            f"band width {bw:g} Hz is below the resolution bandwidth {s.resolution_bw:g} Hz")
    f_nyq = s.frequencies[-1]
    if not (0.0 <= f0 <= f_nyq):
        raise AnalysisError(f"band center {f0:g} Hz outside [0, {f_nyq:g}] Hz")
    lo, hi = f0 - bw / 2.0, f0 + bw / 2.0
    if lo < -s.bin_width or hi > f_nyq + s.bin_width:
        raise AnalysisError(
            f"band [{lo:g}, {hi:g}] Hz extends outside the spectrum range")
    mask = (s.frequencies >= lo) & (s.frequencies <= hi)
    p_v2 = float(np.sum(s.psd[mask]) * s.bin_width)
    p_watt = p_v2 / r_load
    return p_watt, watt_to_dbm(p_watt)


def find_carrier(s: Spectrum, f_min: float, f_max: float):
    """Locate the strongest line inside [f_min, f_max].

    Returns (f_peak, p_peak_v2): the peak-bin frequency refined by
    3-point parabolic interpolation, and the spectral power integrated
    over +-3 resolution bandwidths around it [V^2].
    """
    if not (f_min < f_max):
        raise AnalysisError(f"empty carrier search range [{f_min:g}, {f_max:g}]")
    mask = (s.frequencies >= f_min) & (s.frequencies <= f_max)
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        raise AnalysisError(
            f"carrier search range [{f_min:g}, {f_max:g}] Hz holds no spectrum bins")
    k = int(idx[np.argmax(s.psd[idx])])
    f_peak = float(s.frequencies[k])
    if 0 < k < s.frequencies.size - 1:
        ym, y0, yp = s.psd[k - 1], s.psd[k], s.psd[k + 1]
        denom = ym - 2.0 * y0 + yp
        if denom < 0.0:
            delta = 0.5 * (ym - yp) / denom
            if abs(delta) <= 0.5:
                f_peak += delta * s.bin_width
    half = 3.0 * s.resolution_bw
    lo = max(0.0, f_peak - half)
    hi = min(float(s.frequencies[-1]), f_peak + half)
    band = (s.frequencies >= lo) & (s.frequencies <= hi)
    p_peak = float(np.sum(s.psd[band]) * s.bin_width)
    return f_peak, p_peak


def _lorentzian(f, p0, fc, fwhm, floor):
    hw2 = (0.5 * fwhm) ** 2
    return p0 * hw2 / ((f - fc) ** 2 + hw2) + floor


def _half_power_width(f, p, k):
    """Interpolated -3 dB crossing width around local maximum index k."""
    half = p[k] / 2.0
    lo = None
    for i in range(k, 0, -1):
        if p[i - 1] <= half:
            frac = (p[i] - half) / (p[i] - p[i - 1])
            lo = f[i] - frac * (f[i] - f[i - 1])
            break
    hi = None
    for i in range(k, p.size - 1):
        if p[i + 1] <= half:
            frac = (p[i] - half) / (p[i] - p[i + 1])
            hi = f[i] + frac * (f[i + 1] - f[i])
            break
    if lo is None or hi is None:
        return None
    return float(hi - lo)


def linewidth(s: Spectrum, f_peak: float) -> LinewidthEstimate:
    """FWHM of the line at f_peak.

    Least-squares Lorentzian fit over +-20 resolution bandwidths with
    a free noise floor; falls back to the interpolated half-power
    crossing width when the fit does not converge.
    """
    df = s.bin_width
    k = int(round(f_peak / df))
    if k <= 1 or k >= s.frequencies.size - 2:
        raise AnalysisError(f"peak at {f_peak:g} Hz sits at the spectrum edge")
    # snap to the true local maximum in case f_peak was refined off-bin
    k0 = max(1, k - 2) + int(np.argmax(s.psd[max(1, k - 2):k + 3]))
    k = k0
    if s.psd[k] <= 0.0:
        raise AnalysisError("peak bin has zero power")
    # crude width from the full grid first, so lines broader than the
    # nominal fit window still get covered by it
    w0 = _half_power_width(s.frequencies, s.psd, k)
    half_span = 20.0 * s.resolution_bw
    if w0 is not None:
        half_span = max(half_span, 2.5 * w0)
    else:
        w0 = 2.0 * df
    mask = np.abs(s.frequencies - s.frequencies[k]) <= half_span
    f = s.frequencies[mask]
    p = s.psd[mask]
    if p.size < 5:
        raise AnalysisError("too few bins around the peak for a width estimate")
    scale = float(s.psd[k])
    pn = p / scale
    kk = int(np.argmax(pn))
    width = None
    method = "lorentzian"
    try:
        popt, _ = optimize.curve_fit(
            _lorentzian, f, pn,
            p0=[1.0, f[kk], w0, float(np.median(pn))],
            bounds=([0.0, f[0], df * 1e-3, 0.0],
                    [np.inf, f[-1], f[-1] - f[0], 1.0]),
            maxfev=5000, xtol=1e-12, ftol=1e-12)
        width = float(popt[2])
        if not math.isfinite(width) or width <= 0.0:
            width = None
    except (RuntimeError, ValueError):
        width = None
    if width is None:
        method = "half_power"
        width = _half_power_width(f, pn, kk)
        if width is None:
            width = 2.0 * s.resolution_bw
    limited = width <= 2.0 * s.resolution_bw
    return LinewidthEstimate(value_hz=float(width),
                             resolution_limited=bool(limited), method=method)


def instantaneous_phase(series, fs: float, f0: float) -> InstantaneousPhase:
    """Phase of the component near f0 by quadrature demodulation.

    The series is mixed with cos/sin at f0, low-passed at f0/2 with a
    zero-phase 6th-order Butterworth filter, and the four-quadrant
    angle is unwrapped. Samples within ten carrier periods of either
    end are flagged invalid (filter edge transients).
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise AnalysisError("series must be one-dimensional")
    if not (0.0 < f0 < fs / 2.0):
        raise AnalysisError(f"f0 = {f0:g} Hz outside (0, {fs / 2:g}) Hz")
    n_period = fs / f0
    if x.size < 10.0 * n_period:
        raise AnalysisError(
            f"series of {x.size} samples covers fewer than 10 carrier periods")
    t = np.arange(x.size) / fs
    lo_i = np.cos(2.0 * np.pi * f0 * t)
    lo_q = np.sin(2.0 * np.pi * f0 * t)
    sos = signal.butter(6, (f0 / 2.0) / (fs / 2.0), output="sos")
    i_bb = signal.sosfiltfilt(sos, x * lo_i)
    q_bb = signal.sosfiltfilt(sos, x * lo_q)
    phase = np.unwrap(np.arctan2(-q_bb, i_bb))
    n_edge = int(math.ceil(10.0 * n_period))
    valid = np.ones(x.size, dtype=bool)
    valid[:n_edge] = False
    valid[x.size - n_edge:] = False
    return InstantaneousPhase(phase=phase, valid=valid, f0=float(f0), fs=float(fs))


def phase_noise(phase, fs: float, segment_len: int = 0) -> PhaseNoiseCurve:
    """L(df) = 10 log10(S_phi/2) from detrended phase samples.

    The input must already have its linear ramp removed. segment_len 0
    picks the largest power of two giving at least four averaged
    segments.
    """
    x = np.asarray(phase, dtype=np.float64)
    if x.ndim != 1:
        raise AnalysisError("phase must be one-dimensional")
    if segment_len == 0:
        segment_len = 2 ** int(math.floor(math.log2(max(x.size // 4, 2))))
        segment_len = max(segment_len, 64)
    if x.size < segment_len:
        raise AnalysisError(
            f"{x.size} phase samples are fewer than one segment ({segment_len})")
    freqs, s_phi = signal.welch(
        x, fs=fs, window="hann", nperseg=segment_len,
        noverlap=segment_len // 2, detrend="constant",
        scaling="density", return_onesided=True)
    # zero-offset bin has no meaning for an offset curve
    freqs = freqs[1:]
    s_phi = s_phi[1:]
    l_db = np.full(freqs.shape, L_FLOOR_DBC)
    pos = s_phi > 0.0
    l_db[pos] = 10.0 * np.log10(s_phi[pos] / 2.0)
    l_db = np.maximum(l_db, L_FLOOR_DBC)
    return PhaseNoiseCurve(offsets=freqs, l_dbc_per_hz=l_db)


def phase_noise_slope(curve: PhaseNoiseCurve, f_lo: float, f_hi: float) -> float:
    """Fitted slope of L(df) in dB/decade over [f_lo, f_hi]."""
    if not (0.0 < f_lo < f_hi):
        raise AnalysisError(f"need 0 < f_lo < f_hi, got [{f_lo:g}, {f_hi:g}]")
    mask = (curve.offsets >= f_lo) & (curve.offsets <= f_hi)
    mask &= curve.l_dbc_per_hz > L_FLOOR_DBC
    if np.count_nonzero(mask) < 4:
        raise AnalysisError("too few phase-noise points in the slope range")
    x = np.log10(curve.offsets[mask])
    y = curve.l_dbc_per_hz[mask]
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
