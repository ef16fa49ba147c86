"""Command-line interface.

Verbs
-----
``run``
    Train/evaluate an experiment from a YAML config or a named preset and
    write CSV + JSON (+ figure) outputs into the output directory.
``presets``
    ``list`` the shipped experiment presets or ``show`` one of them.
``validate``
    Parse and validate a config, printing its content hash.

Exit codes: 0 on success (including optimizer stalls), 1 on configuration
errors, 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import runner
from .config import ConfigError, config_hash, load_config
from .training import NumericalError

__all__ = ["main", "preset_dir", "preset_names", "preset_path"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def preset_dir():
    return Path(__file__).parent / "presets"


def preset_names():
    return sorted(p.stem for p in preset_dir().glob("*.yaml"))


def preset_path(name):
    path = preset_dir() / f"{name}.yaml"
    if not path.is_file():
        known = ", ".join(preset_names())
        raise ConfigError(f"unknown preset {name!r} (available: {known})")
    return path


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit code 1, not 2)."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _Parser(prog="qclearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="train and evaluate an experiment")
    src = run_p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a YAML experiment config")
    src.add_argument("--preset", help="name of a shipped preset")
    run_p.add_argument("--seed", type=int, default=None, help="override experiment.seed")
    run_p.add_argument("--out", default=None, help="output directory (default runs/<name>)")

    presets_p = sub.add_parser("presets", help="inspect shipped presets")
    presets_sub = presets_p.add_subparsers(dest="presets_verb", required=True)
    presets_sub.add_parser("list", help="list preset names")
    show_p = presets_sub.add_parser("show", help="print a preset file")
    show_p.add_argument("name")

    val_p = sub.add_parser("validate", help="validate a config file")
    val_src = val_p.add_mutually_exclusive_group(required=True)
    val_src.add_argument("--config", help="path to a YAML experiment config")
    val_src.add_argument("--preset", help="name of a shipped preset")
    return parser


def _load(args):
    path = preset_path(args.preset) if args.preset else args.config
    return load_config(path)


def _cmd_run(args):
    cfg = _load(args)
    if args.seed is not None:
        cfg.experiment.seed = args.seed
    out_dir = Path(args.out) if args.out else Path("runs") / cfg.experiment.name
    print(f"running {cfg.experiment.name!r} (method={cfg.experiment.method}) -> {out_dir}")
    result = runner.run(cfg, out_dir, seed=args.seed)
    results = result.record.get("results", {})
    if "final_loss" in results:
        print(f"status={result.status} final_loss={results['final_loss']:.6e}")
    else:
        print(f"status={result.status}")
    if "bures_mean_final" in results:
        print(
            f"bures step1={results['bures_mean_step1']:.6e} "
            f"final={results['bures_mean_final']:.6e}"
        )
    print(f"outputs written to {out_dir}")
    return EXIT_OK


def _cmd_presets(args):
    if args.presets_verb == "list":
        for name in preset_names():
            print(name)
        return EXIT_OK
    print(preset_path(args.name).read_text(encoding="utf-8"), end="")
    return EXIT_OK


def _cmd_validate(args):
    cfg = _load(args)
    print(f"OK {config_hash(cfg)}")
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "presets":
            return _cmd_presets(args)
        return _cmd_validate(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
