"""Experiment runner: config in, deterministic CSV/JSON artifacts out.

Every artifact is a pure function of (config, seed, software version);
re-running the same config produces byte-identical files, manifest
wall time excluded. Each artifact is written by a single writer via an
atomic rename, and the manifest is written last, only after the whole
run has succeeded.
"""

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, replace as dc_replace

import numpy as np

from . import __version__
from .config import (ExperimentConfig, build_network, build_stepper,
                     emit_config, override_seed)
from .errors import AnalysisError, ConfigError
from .mixer import (MixerReport, SweepSpec, iip3_from_points, mixer_sweep,
                    p1db_from_points, volume_lock_study)
from .network import simulate_network
from .spectral import (band_power, find_carrier, instantaneous_phase,
                       linewidth, phase_noise, welch_psd)
from .stepping import TraceSet

__all__ = ["RunManifest", "run_experiment"]


@dataclass(frozen=True)
class RunManifest:
    """Provenance record written after a successful run."""

    config_sha256: str
    master_seed: int
    experiment: str
    software_version: str
    artifacts: tuple
    wall_time_s: float

    def to_json(self) -> str:
        doc = {
            "config_sha256": self.config_sha256,
            "master_seed": self.master_seed,
            "experiment": self.experiment,
            "software_version": self.software_version,
            "artifacts": list(self.artifacts),
            "wall_time_s": self.wall_time_s,
        }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _write_text_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    os.replace(tmp, path)


def _g17(x: float) -> str:
    return "%.17g" % x


def _csv_text(header: list, columns: list) -> str:
    """CSV with 17-significant-digit numbers; None cells become nan."""
    n = len(columns[0])
    lines = [",".join(header)]
    for i in range(n):
        cells = []
        for col in columns:
            v = col[i]
            if v is None:
                cells.append("nan")
            elif isinstance(v, str):
                cells.append(v)
            else:
                cells.append(_g17(float(v)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _spectrum_csv(s) -> str:
    return _csv_text(["freq_hz", "psd_v2_per_hz"], [s.frequencies, s.psd])


def _trace_csv(tr: TraceSet) -> str:
    header = ["time_s"]
    cols = [tr.time()]
    for j in range(tr.n_oscillators):
        header += [f"m_x_{j}", f"m_y_{j}", f"m_z_{j}", f"v_{j}", f"i_inj_{j}"]
        cols += [tr.m[j, :, 0], tr.m[j, :, 1], tr.m[j, :, 2],
                 tr.voltage[j], tr.injected_current[j]]
    return _csv_text(header, cols)


def _settle_index(settle_time: float, fs: float) -> int:
    return int(settle_time * fs)


def _resolve_r_load(cfg: ExperimentConfig, device) -> float:
    return cfg.analysis.r_load if cfg.analysis.r_load > 0.0 else device.r_av


def _analyze_carrier(v: np.ndarray, fs: float, cfg: ExperimentConfig,
                     r_load: float):
    """Welch spectrum plus carrier metrics for one voltage channel."""
    a = cfg.analysis
    s = welch_psd(v, fs, a.segment_len, check_parseval=a.check_parseval)
    f_lo, f_hi = a.carrier_band
    f0, _ = find_carrier(s, f_lo, min(f_hi, s.frequencies[-1]))
    lw = linewidth(s, f0)
    p_w, p_dbm = band_power(s, f0, 6.0 * s.resolution_bw, r_load)
    metrics = {
        "f_carrier_hz": f0,
        "carrier_band_power_w": p_w,
        "carrier_band_power_dbm": p_dbm,
        "linewidth_hz": lw.value_hz,
        "linewidth_method": lw.method,
        "resolution_limited": lw.resolution_limited,
        "resolution_bw_hz": s.resolution_bw,
    }
    return s, f0, metrics


def _auto_phase_segment(n: int, explicit: int) -> int:
    if explicit > 0:
        return explicit
    return max(64, 2 ** int(np.floor(np.log2(max(n // 4, 2)))))


def _detrended_phase(v: np.ndarray, fs: float, f0: float) -> np.ndarray:
    ip = instantaneous_phase(v, fs, f0)
    ph = ip.interior()
    t = np.arange(ph.size) / fs
    return ph - np.polyval(np.polyfit(t, ph, 1), t)


def _run_simulate(cfg: ExperimentConfig, out: str) -> list:
    net = build_network(cfg)
    stepper = build_stepper(cfg)
    tr = simulate_network(net, stepper, cfg.analysis.duration,
                          sample_stride=cfg.analysis.sample_stride,
                          master_seed=cfg.master_seed)
    h = _settle_index(cfg.analysis.settle_time, tr.sample_rate)
    r_load = _resolve_r_load(cfg, net.oscillators[0])
    s, _, metrics = _analyze_carrier(tr.voltage[0, h:], tr.sample_rate,
                                     cfg, r_load)
    metrics["r_load_ohm"] = r_load
    _write_text_atomic(os.path.join(out, "trace.csv"), _trace_csv(tr))
    _write_text_atomic(os.path.join(out, "spectrum.csv"), _spectrum_csv(s))
    _write_text_atomic(os.path.join(out, "metrics.json"), _json_text(metrics))
    return ["trace.csv", "spectrum.csv", "metrics.json"]


def _run_psd_compare(cfg: ExperimentConfig, out: str) -> list:
    net = build_network(cfg)
    stepper = build_stepper(cfg)
    free_net = dc_replace(net, g_m=0.0)
    duration = cfg.analysis.duration
    stride = cfg.analysis.sample_stride
    tr_c = simulate_network(net, stepper, duration, sample_stride=stride,
                            master_seed=cfg.master_seed)
    tr_f = simulate_network(free_net, stepper, duration, sample_stride=stride,
                            master_seed=cfg.master_seed)
    fs = tr_c.sample_rate
    h = _settle_index(cfg.analysis.settle_time, fs)
    r_load = _resolve_r_load(cfg, net.oscillators[0])

    v_c = tr_c.voltage[0, h:]
    v_f = tr_f.voltage[0, h:]
    s_c, f0_c, met_c = _analyze_carrier(v_c, fs, cfg, r_load)
    s_f, f0_f, met_f = _analyze_carrier(v_f, fs, cfg, r_load)

    ph_c = _detrended_phase(v_c, fs, f0_c)
    ph_f = _detrended_phase(v_f, fs, f0_f)
    seg = _auto_phase_segment(min(ph_c.size, ph_f.size),
                              cfg.analysis.phase_segment_len)
    pn_c = phase_noise(ph_c, fs, seg)
    pn_f = phase_noise(ph_f, fs, seg)
    if not np.array_equal(pn_c.offsets, pn_f.offsets):
        raise AnalysisError("phase noise offset grids diverged")

    comparison = {
        "coupled": met_c,
        "uncoupled": met_f,
        "linewidth_ratio": met_c["linewidth_hz"] / met_f["linewidth_hz"],
        "band_power_ratio": (met_c["carrier_band_power_w"] /
                             met_f["carrier_band_power_w"]),
        "r_load_ohm": r_load,
    }
    pn_csv = _csv_text(
        ["offset_hz", "l_coupled_dbc_hz", "l_uncoupled_dbc_hz", "l_diff_db"],
        [pn_c.offsets, pn_c.l_dbc_per_hz, pn_f.l_dbc_per_hz,
         pn_c.l_dbc_per_hz - pn_f.l_dbc_per_hz])

    _write_text_atomic(os.path.join(out, "spectrum_coupled.csv"), _spectrum_csv(s_c))
    _write_text_atomic(os.path.join(out, "spectrum_uncoupled.csv"), _spectrum_csv(s_f))
    _write_text_atomic(os.path.join(out, "comparison.json"), _json_text(comparison))
    _write_text_atomic(os.path.join(out, "phase_noise.csv"), pn_csv)
    return ["spectrum_coupled.csv", "spectrum_uncoupled.csv",
            "comparison.json", "phase_noise.csv"]


def _sweep_points(cfg: ExperimentConfig, threads: int):
    """Shared drive-amplitude sweep used by the mixer experiments."""
    device = cfg.oscillators[0].to_params()
    i_dc = cfg.network.i_dc[0]
    seeds = tuple(cfg.master_seed + s for s in cfg.sweep.seeds)
    spec = SweepSpec(i_ac_grid=cfg.sweep.i_ac, f_rf=cfg.sweep.f_rf,
                     settle_time=cfg.sweep.settle_time,
                     measure_time=cfg.sweep.measure_time, seeds=seeds)
    points = mixer_sweep(device, i_dc, spec, build_stepper(cfg),
                         threads=threads,
                         sample_stride=cfg.analysis.sample_stride,
                         f_osc_hint=cfg.analysis.f_carrier_hint,
                         with_third=cfg.sweep.with_third)
    return points


def _curves_csv(points) -> str:
    return _csv_text(
        ["p_in_dbm", "i_ac_a", "f_osc_hz", "p_carrier_dbm",
         "p_sideband_low_dbm", "p_sideband_high_dbm", "conversion_gain_db",
         "p_third_dbm"],
        [[p.p_in_dbm for p in points], [p.i_ac for p in points],
         [p.f_osc for p in points], [p.p_carrier_dbm for p in points],
         [p.p_sideband_low_dbm for p in points],
         [p.p_sideband_high_dbm for p in points],
         [p.conversion_gain_db for p in points],
         [p.p_third_dbm for p in points]])


def _run_mixer_sweep(cfg: ExperimentConfig, out: str, threads: int) -> list:
    points = _sweep_points(cfg, threads)
    p1db = p1db_from_points(points)
    iip3 = oip3 = None
    try:
        r = iip3_from_points(points, p1db, margin_db=cfg.sweep.margin_db)
        iip3, oip3 = r.iip3_dbm, r.oip3_dbm
    except AnalysisError:
        # a sweep without a usable third-order line still reports gain
        pass
    reports = [asdict(MixerReport(
        f_osc=p.f_osc, f_rf=p.f_rf, p_in_dbm=p.p_in_dbm,
        p_sideband_low_dbm=p.p_sideband_low_dbm,
        p_sideband_high_dbm=p.p_sideband_high_dbm,
        conversion_gain_db=p.conversion_gain_db, sideband="lower",
        p1db_in_dbm=p1db, iip3_dbm=iip3, oip3_dbm=oip3)) for p in points]
    _write_text_atomic(os.path.join(out, "mixer_points.json"), _json_text(reports))
    _write_text_atomic(os.path.join(out, "mixer_curves.csv"), _curves_csv(points))
    return ["mixer_points.json", "mixer_curves.csv"]


def _run_p1db(cfg: ExperimentConfig, out: str, threads: int) -> list:
    points = _sweep_points(cfg, threads)
    p1db = p1db_from_points(points)
    if p1db is None:
        raise AnalysisError("no 1 dB compression point within the swept range; "
                            "extend sweep.i_ac upward")
    low = [p for p in points
           if p.p_in_dbm <= max(q.p_in_dbm for q in points) - 6.0]
    gain = float(np.median([p.p_sideband_low_dbm - p.p_in_dbm for p in low]))
    metrics = {
        "p1db_in_dbm": p1db,
        "small_signal_gain_db": gain,
        "f_rf_hz": cfg.sweep.f_rf,
        "n_points": len(points),
    }
    _write_text_atomic(os.path.join(out, "p1db.json"), _json_text(metrics))
    _write_text_atomic(os.path.join(out, "mixer_curves.csv"), _curves_csv(points))
    return ["p1db.json", "mixer_curves.csv"]


def _run_iip3(cfg: ExperimentConfig, out: str, threads: int) -> list:
    points = _sweep_points(cfg, threads)
    p1db = p1db_from_points(points)
    r = iip3_from_points(points, p1db, margin_db=cfg.sweep.margin_db)
    metrics = {
        "iip3_dbm": r.iip3_dbm,
        "oip3_dbm": r.oip3_dbm,
        "slope_fund_db_per_db": r.slope_fund,
        "slope_third_db_per_db": r.slope_third,
        "p1db_in_dbm": p1db,
        "f_rf_hz": cfg.sweep.f_rf,
        "n_points": len(points),
    }
    _write_text_atomic(os.path.join(out, "iip3.json"), _json_text(metrics))
    _write_text_atomic(os.path.join(out, "mixer_curves.csv"), _curves_csv(points))
    return ["iip3.json", "mixer_curves.csv"]


def _run_volume_lock(cfg: ExperimentConfig, out: str) -> list:
    net = build_network(cfg)
    results = volume_lock_study(net, cfg.sweep.volumes, build_stepper(cfg),
                                cfg.analysis.duration,
                                settle_time=cfg.analysis.settle_time,
                                master_seed=cfg.master_seed,
                                sample_stride=cfg.analysis.sample_stride,
                                f_hint=cfg.analysis.f_carrier_hint)
    rows_csv = _csv_text(
        ["volume_m3", "verdict", "f_carrier_hz"],
        [[r.volume for r in results], [r.verdict for r in results],
         [r.f_carrier for r in results]])
    detail = [{
        "volume_m3": r.volume,
        "verdict": r.verdict,
        "f_carrier_hz": r.f_carrier,
        "pairs": [{"pair": [0, j + 1], "verdict": p.verdict,
                   "drift_rate_rad_per_s": p.drift_rate,
                   "residual_std_rad": p.residual_std}
                  for j, p in enumerate(r.pair_results)],
    } for r in results]
    _write_text_atomic(os.path.join(out, "volume_lock.csv"), rows_csv)
    _write_text_atomic(os.path.join(out, "volume_lock.json"), _json_text(detail))
    return ["volume_lock.csv", "volume_lock.json"]


def run_experiment(cfg: ExperimentConfig, *, out_dir: str | None = None,
                   seed: int | None = None, threads: int = 1) -> RunManifest:
    """Execute one experiment and write its artifacts.

    out_dir and seed override the config's output_dir and master_seed.
    The manifest's config hash is the SHA-256 of the canonical emission
    of the config actually run (seed override included). Returns the
    manifest; raises ConfigError/SimulationError/AnalysisError on
    failure, in which case no manifest is written.
    """
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    cfg = override_seed(cfg, seed)
    out = out_dir if out_dir is not None else cfg.output_dir
    os.makedirs(out, exist_ok=True)
    digest = hashlib.sha256(emit_config(cfg).encode("utf-8")).hexdigest()

    t0 = time.perf_counter()
    if cfg.experiment in ("trajectory", "network"):
        artifacts = _run_simulate(cfg, out)
    elif cfg.experiment == "psd_compare":
        artifacts = _run_psd_compare(cfg, out)
    elif cfg.experiment == "mixer_sweep":
        artifacts = _run_mixer_sweep(cfg, out, threads)
    elif cfg.experiment == "p1db":
        artifacts = _run_p1db(cfg, out, threads)
    elif cfg.experiment == "iip3":
        artifacts = _run_iip3(cfg, out, threads)
    elif cfg.experiment == "volume_lock":
        artifacts = _run_volume_lock(cfg, out)
    else:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")

    # canonical copy of the config actually run, for provenance
    _write_text_atomic(os.path.join(out, "config.json"), emit_config(cfg))
    artifacts.append("config.json")

    manifest = RunManifest(
        config_sha256=digest, master_seed=cfg.master_seed,
        experiment=cfg.experiment, software_version=__version__,
        artifacts=tuple(artifacts),
        wall_time_s=time.perf_counter() - t0)
    _write_text_atomic(os.path.join(out, "manifest.json"), manifest.to_json())
    return manifest
