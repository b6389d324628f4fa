"""Declarative experiment configs: strict JSON schema, exact round-trip.

A config is a versioned JSON document that fully determines every
output byte of a run except wall-clock metadata. Parsing is strict:
unknown fields and constraint violations are rejected with a
diagnostic naming the offending field path (e.g. "stepper.dt").
`parse_config(emit_config(cfg)) == cfg` holds for every valid config.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import GAMMA_DEFAULT
from .device import DeviceParams, unit
from .errors import ConfigError
from .network import NetworkConfig, RFTone
from .stepping import StepperConfig

__all__ = [
    "SCHEMA_VERSION",
    "EXPERIMENTS",
    "DeviceSection",
    "ToneSection",
    "NetworkSection",
    "StepperSection",
    "AnalysisSection",
    "SweepSection",
    "ExperimentConfig",
    "parse_config",
    "emit_config",
    "config_from_dict",
    "config_to_dict",
    "build_network",
    "build_stepper",
    "override_seed",
]

SCHEMA_VERSION = 1

EXPERIMENTS = ("trajectory", "network", "psd_compare", "mixer_sweep",
               "p1db", "iip3", "volume_lock")

# section defaults mirror the runtime dataclasses they configure
_DEV = DeviceParams()


def _fail(path: str, msg: str) -> None:
    raise ConfigError(f"{path}: {msg}")


class _Reader:
    """Strict field-by-field reader for one JSON object.

    Tracks which keys were consumed; finish() rejects the rest, naming
    each unknown field by its full path.
    """

    def __init__(self, doc: dict, path: str):
        self.doc = doc
        self.path = path
        self.seen: set = set()

    def key_path(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def _fetch(self, key: str, default):
        self.seen.add(key)
        return self.doc.get(key, default)

    def number(self, key: str, default: float, *, minimum: float | None = None,
               above: float | None = None) -> float:
        v = self._fetch(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            _fail(self.key_path(key), f"expected a number, got {v!r}")
        x = float(v)
        if x != x:
            _fail(self.key_path(key), "must be finite")
        if minimum is not None and x < minimum:
            _fail(self.key_path(key), f"must be >= {minimum}, got {x!r}")
        if above is not None and not (x > above):
            _fail(self.key_path(key), f"must be > {above}, got {x!r}")
        return x

    def integer(self, key: str, default: int, *, minimum: int | None = None) -> int:
        v = self._fetch(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            _fail(self.key_path(key), f"expected an integer, got {v!r}")
        if minimum is not None and v < minimum:
            _fail(self.key_path(key), f"must be >= {minimum}, got {v}")
        return v

    def boolean(self, key: str, default: bool) -> bool:
        v = self._fetch(key, default)
        if not isinstance(v, bool):
            _fail(self.key_path(key), f"expected true or false, got {v!r}")
        return v

    def string(self, key: str, default: str, choices=None) -> str:
        v = self._fetch(key, default)
        if not isinstance(v, str):
            _fail(self.key_path(key), f"expected a string, got {v!r}")
        if choices is not None and v not in choices:
            _fail(self.key_path(key), f"must be one of {list(choices)}, got {v!r}")
        return v

    def vec3(self, key: str, default: tuple) -> tuple:
        v = self._fetch(key, default)
        if isinstance(v, tuple):
            return v
        if (not isinstance(v, list)) or len(v) != 3:
            _fail(self.key_path(key), f"expected a 3-element array, got {v!r}")
        out = []
        for i, c in enumerate(v):
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                _fail(f"{self.key_path(key)}[{i}]", f"expected a number, got {c!r}")
            out.append(float(c))
        return tuple(out)

    def number_list(self, key: str, default: tuple, *, above: float | None = None,
                    increasing: bool = False) -> tuple:
        v = self._fetch(key, default)
        if isinstance(v, tuple):
            return v
        if not isinstance(v, list):
            _fail(self.key_path(key), f"expected an array of numbers, got {v!r}")
        out = []
        for i, c in enumerate(v):
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                _fail(f"{self.key_path(key)}[{i}]", f"expected a number, got {c!r}")
            x = float(c)
            if above is not None and not (x > above):
                _fail(f"{self.key_path(key)}[{i}]", f"must be > {above}, got {x!r}")
            out.append(x)
        if increasing and any(b <= a for a, b in zip(out, out[1:])):
            _fail(self.key_path(key), "must be strictly increasing")
        return tuple(out)

    def int_list(self, key: str, default: tuple, *, minimum: int = 0) -> tuple:
        v = self._fetch(key, default)
        if isinstance(v, tuple):
            return v
        if not isinstance(v, list) or len(v) == 0:
            _fail(self.key_path(key), f"expected a non-empty array of integers, got {v!r}")
        for i, c in enumerate(v):
            if isinstance(c, bool) or not isinstance(c, int) or c < minimum:
                _fail(f"{self.key_path(key)}[{i}]",
                      f"expected an integer >= {minimum}, got {c!r}")
        return tuple(v)

    def obj(self, key: str) -> dict:
        v = self._fetch(key, {})
        if not isinstance(v, dict):
            _fail(self.key_path(key), f"expected an object, got {v!r}")
        return v

    def array_of_obj(self, key: str) -> list:
        v = self._fetch(key, [])
        if not isinstance(v, list):
            _fail(self.key_path(key), f"expected an array of objects, got {v!r}")
        for i, item in enumerate(v):
            if not isinstance(item, dict):
                _fail(f"{self.key_path(key)}[{i}]", f"expected an object, got {item!r}")
        return v

    def finish(self) -> None:
        for k in self.doc:
            if k not in self.seen:
                _fail(self.key_path(k), "unknown field")


@dataclass(frozen=True)
class DeviceSection:
    """Per-oscillator physical parameters (plain data form)."""

    alpha: float = _DEV.alpha
    gamma: float = GAMMA_DEFAULT
    ms: float = _DEV.ms
    volume: float = _DEV.volume
    epsilon: float = _DEV.epsilon
    k1: tuple = tuple(_DEV.k1)
    k2: tuple = tuple(_DEV.k2)
    m_p: tuple = tuple(_DEV.m_p)
    r_p: float = _DEV.r_p
    r_ap: float = _DEV.r_ap
    temperature: float = _DEV.temperature

    def to_params(self) -> DeviceParams:
        return DeviceParams(alpha=self.alpha, gamma=self.gamma, ms=self.ms,
                            volume=self.volume, epsilon=self.epsilon,
                            k1=list(self.k1), k2=list(self.k2),
                            m_p=list(self.m_p), r_p=self.r_p, r_ap=self.r_ap,
                            temperature=self.temperature)


@dataclass(frozen=True)
class ToneSection:
    """One injected RF current tone."""

    amplitude: float
    frequency: float
    phase: float = 0.0
    target: int = 0


@dataclass(frozen=True)
class NetworkSection:
    """Array size, coupling path, bias and drive."""

    n_oscillators: int = 1
    topology: str = "none"
    g_m: float = 0.0
    hp_cutoff: float = 9.0e6
    i_dc: tuple = (0.0,)
    rf: tuple = ()
    initial_m: tuple = ()


@dataclass(frozen=True)
class StepperSection:
    dt: float = 1.0e-12
    scheme: str = "heun"
    renormalize: bool = True


@dataclass(frozen=True)
class AnalysisSection:
    """Record length and spectral-analysis settings."""

    duration: float = 2.0e-6
    settle_time: float = 0.0
    sample_stride: int = 16
    segment_len: int = 32768
    carrier_band: tuple = (0.3e9, 3.0e9)
    f_carrier_hint: float = 0.0
    r_load: float = 0.0
    check_parseval: bool = False
    phase_segment_len: int = 0


@dataclass(frozen=True)
class SweepSection:
    """Drive grids for mixer characterization and volume studies."""

    i_ac: tuple = ()
    f_rf: float = 0.0
    settle_time: float = 0.0
    measure_time: float = 0.0
    seeds: tuple = (0,)
    volumes: tuple = ()
    margin_db: float = 5.0
    with_third: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of one run.

    oscillators holds one resolved DeviceSection per oscillator; user
    configs may give only a defaults block plus partial overrides.
    """

    schema_version: int
    experiment: str
    device: DeviceSection = field(default_factory=DeviceSection)
    oscillators: tuple = ()
    network: NetworkSection = field(default_factory=NetworkSection)
    stepper: StepperSection = field(default_factory=StepperSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    master_seed: int = 0
    output_dir: str = "runs"


def _read_device(doc: dict, path: str, base: DeviceSection) -> DeviceSection:
    rd = _Reader(doc, path)
    dev = DeviceSection(
        alpha=rd.number("alpha", base.alpha, above=0.0),
        gamma=rd.number("gamma", base.gamma, above=0.0),
        ms=rd.number("ms", base.ms, above=0.0),
        volume=rd.number("volume", base.volume, above=0.0),
        epsilon=rd.number("epsilon", base.epsilon, above=0.0),
        k1=rd.vec3("k1", base.k1),
        k2=rd.vec3("k2", base.k2),
        m_p=rd.vec3("m_p", base.m_p),
        r_p=rd.number("r_p", base.r_p, above=0.0),
        r_ap=rd.number("r_ap", base.r_ap, above=0.0),
        temperature=rd.number("temperature", base.temperature, minimum=0.0),
    )
    rd.finish()
    if not dev.r_ap > dev.r_p:
        _fail(f"{path}.r_ap" if path else "r_ap",
              f"must exceed r_p ({dev.r_p!r}), got {dev.r_ap!r}")
    try:
        dev.to_params()
    except ConfigError as e:
        _fail(path or "device", str(e))
    return dev


def _read_network(doc: dict, base_dev: DeviceSection) -> NetworkSection:
    rd = _Reader(doc, "network")
    n = rd.integer("n_oscillators", 1, minimum=1)
    topology = rd.string("topology", "none", choices=("none", "global"))
    g_m = rd.number("g_m", 0.0, minimum=0.0)
    hp_cutoff = rd.number("hp_cutoff", 9.0e6, above=0.0)

    rd.seen.add("i_dc")
    idc_raw = doc.get("i_dc", 0.0)
    if isinstance(idc_raw, bool):
        _fail("network.i_dc", f"expected a number or array, got {idc_raw!r}")
    if isinstance(idc_raw, (int, float)):
        i_dc = (float(idc_raw),) * n
    elif isinstance(idc_raw, (list, tuple)):
        i_dc = rd.number_list("i_dc", tuple(idc_raw))
        if len(i_dc) != n:
            _fail("network.i_dc", f"expected {n} entries, got {len(i_dc)}")
    else:
        _fail("network.i_dc", f"expected a number or array, got {idc_raw!r}")

    tones = []
    for i, item in enumerate(rd.array_of_obj("rf")):
        trd = _Reader(item, f"network.rf[{i}]")
        tone = ToneSection(
            amplitude=trd.number("amplitude", 0.0, minimum=0.0),
            frequency=trd.number("frequency", 0.0, above=0.0),
            phase=trd.number("phase", 0.0),
            target=trd.integer("target", 0, minimum=0),
        )
        trd.finish()
        if tone.target >= n:
            _fail(f"network.rf[{i}].target",
                  f"must be < n_oscillators ({n}), got {tone.target}")
        tones.append(tone)

    init_raw = rd._fetch("initial_m", [])
    if isinstance(init_raw, tuple):
        initial_m = init_raw
    else:
        if not isinstance(init_raw, list):
            _fail("network.initial_m", f"expected an array, got {init_raw!r}")
        if init_raw and len(init_raw) != n:
            _fail("network.initial_m", f"expected {n} entries, got {len(init_raw)}")
        initial_m = tuple(_read_m_entry(v, f"network.initial_m[{j}]")
                          for j, v in enumerate(init_raw))

    rd.finish()
    return NetworkSection(n_oscillators=n, topology=topology, g_m=g_m,
                          hp_cutoff=hp_cutoff, i_dc=i_dc, rf=tuple(tones),
                          initial_m=initial_m)


def _read_m_entry(v, path: str) -> tuple:
    if not isinstance(v, list) or len(v) != 3:
        _fail(path, f"expected a 3-element array, got {v!r}")
    out = []
    for i, c in enumerate(v):
        if isinstance(c, bool) or not isinstance(c, (int, float)):
            _fail(f"{path}[{i}]", f"expected a number, got {c!r}")
        out.append(float(c))
    if all(c == 0.0 for c in out):
        _fail(path, "must be a nonzero vector")
    return tuple(out)


def _read_stepper(doc: dict) -> StepperSection:
    rd = _Reader(doc, "stepper")
    sec = StepperSection(
        dt=rd.number("dt", 1.0e-12, above=0.0),
        scheme=rd.string("scheme", "heun", choices=("heun", "rk4")),
        renormalize=rd.boolean("renormalize", True),
    )
    rd.finish()
    StepperConfig(dt=sec.dt, scheme=sec.scheme, renormalize=sec.renormalize)
    return sec


def _read_analysis(doc: dict) -> AnalysisSection:
    rd = _Reader(doc, "analysis")
    sec = AnalysisSection(
        duration=rd.number("duration", 2.0e-6, above=0.0),
        settle_time=rd.number("settle_time", 0.0, minimum=0.0),
        sample_stride=rd.integer("sample_stride", 16, minimum=1),
        segment_len=rd.integer("segment_len", 32768, minimum=8),
        carrier_band=rd.number_list("carrier_band", (0.3e9, 3.0e9), above=0.0,
                                    increasing=True),
        f_carrier_hint=rd.number("f_carrier_hint", 0.0, minimum=0.0),
        r_load=rd.number("r_load", 0.0, minimum=0.0),
        check_parseval=rd.boolean("check_parseval", False),
        phase_segment_len=rd.integer("phase_segment_len", 0, minimum=0),
    )
    rd.finish()
    if len(sec.carrier_band) != 2:
        _fail("analysis.carrier_band", f"expected 2 entries, got {len(sec.carrier_band)}")
    if not sec.settle_time < sec.duration:
        _fail("analysis.settle_time",
              f"must be < duration ({sec.duration!r}), got {sec.settle_time!r}")
    return sec


def _read_sweep(doc: dict) -> SweepSection:
    rd = _Reader(doc, "sweep")
    sec = SweepSection(
        i_ac=rd.number_list("i_ac", (), above=0.0, increasing=True),
        f_rf=rd.number("f_rf", 0.0, minimum=0.0),
        settle_time=rd.number("settle_time", 0.0, minimum=0.0),
        measure_time=rd.number("measure_time", 0.0, minimum=0.0),
        seeds=rd.int_list("seeds", (0,)),
        volumes=rd.number_list("volumes", (), above=0.0, increasing=True),
        margin_db=rd.number("margin_db", 5.0, minimum=0.0),
        with_third=rd.boolean("with_third", True),
    )
    rd.finish()
    return sec


_MIXER_EXPERIMENTS = ("mixer_sweep", "p1db", "iip3")


def _check_experiment(cfg: ExperimentConfig) -> None:
    """Cross-section requirements that depend on the experiment kind."""
    if cfg.experiment == "trajectory" and cfg.network.n_oscillators != 1:
        _fail("network.n_oscillators",
              "trajectory runs one oscillator; use experiment 'network' "
              f"for arrays, got {cfg.network.n_oscillators}")
    if cfg.experiment in _MIXER_EXPERIMENTS:
        if len(cfg.sweep.i_ac) == 0:
            _fail("sweep.i_ac", f"required for experiment {cfg.experiment!r}")
        if not cfg.sweep.f_rf > 0.0:
            _fail("sweep.f_rf", f"required for experiment {cfg.experiment!r}")
        if not cfg.sweep.settle_time > 0.0:
            _fail("sweep.settle_time", f"required for experiment {cfg.experiment!r}")
        if not cfg.sweep.measure_time > 0.0:
            _fail("sweep.measure_time", f"required for experiment {cfg.experiment!r}")
    if cfg.experiment == "volume_lock" and len(cfg.sweep.volumes) < 2:
        _fail("sweep.volumes", "need at least two volumes for a volume_lock sweep")
    if cfg.experiment == "psd_compare":
        if cfg.network.topology != "global" or cfg.network.g_m <= 0.0:
            _fail("network.g_m",
                  "psd_compare requires global topology with g_m > 0 "
                  "(the uncoupled reference is derived by setting g_m = 0)")


def config_from_dict(doc) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"config root: expected an object, got {doc!r}")
    rd = _Reader(doc, "")
    version = rd.integer("schema_version", -1)
    if version != SCHEMA_VERSION:
        _fail("schema_version",
              f"this build reads version {SCHEMA_VERSION}, got {version}")
    experiment = rd.string("experiment", "", choices=EXPERIMENTS)

    device = _read_device(rd.obj("device"), "device", DeviceSection())
    network = _read_network(rd.obj("network"), device)

    osc_docs = rd.array_of_obj("oscillators")
    if osc_docs and len(osc_docs) != network.n_oscillators:
        _fail("oscillators",
              f"expected {network.n_oscillators} entries "
              f"(network.n_oscillators), got {len(osc_docs)}")
    if osc_docs:
        oscillators = tuple(_read_device(d, f"oscillators[{j}]", device)
                            for j, d in enumerate(osc_docs))
    else:
        oscillators = (device,) * network.n_oscillators

    cfg = ExperimentConfig(
        schema_version=version,
        experiment=experiment,
        device=device,
        oscillators=oscillators,
        network=network,
        stepper=_read_stepper(rd.obj("stepper")),
        analysis=_read_analysis(rd.obj("analysis")),
        sweep=_read_sweep(rd.obj("sweep")),
        master_seed=rd.integer("master_seed", 0, minimum=0),
        output_dir=rd.string("output_dir", "runs"),
    )
    rd.finish()
    if not cfg.output_dir:
        _fail("output_dir", "must be a non-empty path")
    _check_experiment(cfg)
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config syntax error: {e}") from None
    return config_from_dict(doc)


def _device_dict(d: DeviceSection) -> dict:
    return {"alpha": d.alpha, "gamma": d.gamma, "ms": d.ms, "volume": d.volume,
            "epsilon": d.epsilon, "k1": list(d.k1), "k2": list(d.k2),
            "m_p": list(d.m_p), "r_p": d.r_p, "r_ap": d.r_ap,
            "temperature": d.temperature}


def config_to_dict(cfg: ExperimentConfig) -> dict:
    net = cfg.network
    return {
        "schema_version": cfg.schema_version,
        "experiment": cfg.experiment,
        "device": _device_dict(cfg.device),
        "oscillators": [_device_dict(d) for d in cfg.oscillators],
        "network": {
            "n_oscillators": net.n_oscillators,
            "topology": net.topology,
            "g_m": net.g_m,
            "hp_cutoff": net.hp_cutoff,
            "i_dc": list(net.i_dc),
            "rf": [{"amplitude": t.amplitude, "frequency": t.frequency,
                    "phase": t.phase, "target": t.target} for t in net.rf],
            "initial_m": [list(v) for v in net.initial_m],
        },
        "stepper": {"dt": cfg.stepper.dt, "scheme": cfg.stepper.scheme,
                    "renormalize": cfg.stepper.renormalize},
        "analysis": {
            "duration": cfg.analysis.duration,
            "settle_time": cfg.analysis.settle_time,
            "sample_stride": cfg.analysis.sample_stride,
            "segment_len": cfg.analysis.segment_len,
            "carrier_band": list(cfg.analysis.carrier_band),
            "f_carrier_hint": cfg.analysis.f_carrier_hint,
            "r_load": cfg.analysis.r_load,
            "check_parseval": cfg.analysis.check_parseval,
            "phase_segment_len": cfg.analysis.phase_segment_len,
        },
        "sweep": {
            "i_ac": list(cfg.sweep.i_ac),
            "f_rf": cfg.sweep.f_rf,
            "settle_time": cfg.sweep.settle_time,
            "measure_time": cfg.sweep.measure_time,
            "seeds": list(cfg.sweep.seeds),
            "volumes": list(cfg.sweep.volumes),
            "margin_db": cfg.sweep.margin_db,
            "with_third": cfg.sweep.with_third,
        },
        "master_seed": cfg.master_seed,
        "output_dir": cfg.output_dir,
    }


def emit_config(cfg: ExperimentConfig) -> str:
    """Serialize a config to canonical JSON (exact float round-trip)."""
    return json.dumps(config_to_dict(cfg), indent=2, allow_nan=False) + "\n"


def build_network(cfg: ExperimentConfig) -> NetworkConfig:
    """NetworkConfig for a run, resolving defaults to runtime objects."""
    devices = [d.to_params() for d in cfg.oscillators]
    tones = [RFTone(amplitude=t.amplitude, frequency=t.frequency,
                    phase=t.phase, target=t.target) for t in cfg.network.rf]
    initial = None
    if cfg.network.initial_m:
        initial = np.stack([unit(v) for v in cfg.network.initial_m])
    return NetworkConfig(oscillators=devices, g_m=cfg.network.g_m,
                         topology=cfg.network.topology,
                         hp_cutoff=cfg.network.hp_cutoff,
                         i_dc=np.array(cfg.network.i_dc),
                         rf_tones=tones, initial_m=initial)


def build_stepper(cfg: ExperimentConfig) -> StepperConfig:
    s = cfg.stepper
    return StepperConfig(dt=s.dt, scheme=s.scheme, renormalize=s.renormalize)


def override_seed(cfg: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    if seed is None:
        return cfg
    if seed < 0:
        raise ConfigError(f"master_seed must be >= 0, got {seed}")
    return replace(cfg, master_seed=seed)
