"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 quadrature convergence error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import PRESETS, ConfigError, parse_config, parse_text, preset
from .experiments import run_experiment
from .protocol import WORKERS_ENV
from .theory import ConvergenceError

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4

COMMANDS = {
    "run": "single",
    "sweep-noise": "noise-sweep",
    "sweep-size": "size-sweep",
    "trap": "trap",
    "occupations": "occupations",
    "theory-delta": "theory-delta",
    "rate-model": "rate-model",
    "kz": "kz",
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="demag",
        description="Bath-assisted cooling simulator and theory toolkit.",
        epilog=f"Set {WORKERS_ENV}=n to fix the number of worker processes (default: all cores).",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, exp in COMMANDS.items():
        s = sub.add_parser(name, help=f"{exp} experiment")
        src = s.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="config file, or a manifest.json to re-run")
        src.add_argument("--preset", choices=sorted(PRESETS))
        s.add_argument("--seed", type=int, help="base seed (overrides the config)")
        s.add_argument("--out", help="output directory (overrides the config)")
        s.add_argument("--trajectories", type=int, help="number of trajectories (overrides N_init)")
        s.add_argument("--plot", action="store_true", help="also write SVG figures")
    s = sub.add_parser("plot", help="draw SVG figures from an output directory")
    s.add_argument("--out", required=True)
    s = sub.add_parser("presets", help="list presets or print one")
    s.add_argument("name", nargs="?")
    return p


def _load(args):
    """Returns (config, n_init, seed) honoring manifests."""
    if args.preset:
        return preset(args.preset), None, None
    path = args.config
    if path.endswith(".json"):
        try:
            with open(path) as fh:
                m = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not a valid manifest: {exc}") from exc
        return parse_text(m["config_text"]), m.get("n_init"), m["seeds"]["base_seed"]
    return parse_config(path), None, None


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "presets":
            if args.name:
                if args.name not in PRESETS:
                    raise ConfigError(f"unknown preset {args.name!r}")
                print(PRESETS[args.name], end="")
            else:
                print("\n".join(PRESETS))
            return EXIT_OK
        if args.command == "plot":
            from .plotting import plot_directory

            for path in plot_directory(args.out):
                print(path)
            return EXIT_OK
        cfg, n_init, seed = _load(args)
        if args.trajectories is not None:
            if args.trajectories < 1:
                raise ConfigError("--trajectories must be >= 1")
            n_init = args.trajectories
        if args.seed is not None:
            seed = args.seed
        manifest = run_experiment(cfg, COMMANDS[args.command], args.out, n_init, seed)
        out = args.out or cfg.out
        for name in manifest["outputs"]:
            print(f"{out}/{name}")
        if args.plot:
            from .plotting import plot_directory

            for path in plot_directory(out):
                print(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence error: {exc} (estimate {exc.estimate})", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
