"""Command-line front end.

Each verb runs one experiment kind from a JSON config. Exit codes:
0 success, 1 config error, 2 simulation error, 3 analysis error.
Diagnostics go to standard error; artifact paths go to standard out.
"""

import argparse
import sys

from .config import parse_config
from .errors import AnalysisError, ConfigError, SimulationError
from .runner import run_experiment

# verb -> experiment kinds it accepts
_VERBS = {
    "simulate": ("trajectory", "network"),
    "psd-compare": ("psd_compare",),
    "mixer-sweep": ("mixer_sweep",),
    "p1db": ("p1db",),
    "iip3": ("iip3",),
    "volume-lock": ("volume_lock",),
    "validate": None,
}

_HELP = {
    "simulate": "run a trajectory or network config and write trace, spectrum and metrics",
    "psd-compare": "coupled vs uncoupled spectra, linewidth, power and phase noise",
    "mixer-sweep": "drive-amplitude sweep with per-point mixer reports",
    "p1db": "locate the 1 dB compression point of a drive sweep",
    "iip3": "extrapolate the third-order intercept of a drive sweep",
    "volume-lock": "lock verdicts across a free-layer volume sweep",
    "validate": "parse and validate a config without running it",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stolab",
        description="spin-torque oscillator network and mixer experiments")
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")
    for verb, help_text in _HELP.items():
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("--config", required=True, metavar="PATH",
                       help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, metavar="N",
                       help="override the config's master_seed")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="override the config's output_dir")
        p.add_argument("--threads", type=int, default=1, metavar="N",
                       help="worker threads for sweep experiments")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        try:
            with open(args.config, encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
        cfg = parse_config(text)

        allowed = _VERBS[args.verb]
        if allowed is not None and cfg.experiment not in allowed:
            raise ConfigError(
                f"experiment {cfg.experiment!r} does not match verb "
                f"{args.verb!r} (expected one of {list(allowed)})")
        if args.verb == "validate":
            print(f"ok: experiment={cfg.experiment} "
                  f"oscillators={cfg.network.n_oscillators} "
                  f"master_seed={cfg.master_seed}")
            return 0

        manifest = run_experiment(cfg, out_dir=args.out, seed=args.seed,
                                  threads=args.threads)
        out = args.out if args.out is not None else cfg.output_dir
        for name in manifest.artifacts + ("manifest.json",):
            print(f"{out}/{name}")
        return 0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except SimulationError as e:
        print(f"simulation error: {e}", file=sys.stderr)
        return 2
    except AnalysisError as e:
        print(f"analysis error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
