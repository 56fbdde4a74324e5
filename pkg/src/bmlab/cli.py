"""Command line: ``bmlab <experiment> [--config FILE] [--seed N] [--threads N] [--out DIR]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import EXPERIMENTS
from .errors import BMLabError, ConfigError
from .harness import ExperimentError, load_config, run
from .path_engine import simulate_to_exit

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", type=Path, help="output directory (BMLAB_OUT overrides)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bmlab", description="Planar Brownian motion experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("list", help="list experiments")
    v = sub.add_parser("verify", help="run the configured experiment's assertions without writing data")
    _common(v)
    d = sub.add_parser("dump-path", help="simulate one path and write (t, x, y) rows")
    _common(d)
    d.add_argument("--format", choices=("csv", "npy"), default="csv")
    for name in EXPERIMENTS:
        _common(sub.add_parser(name, help=f"run {name}"))
    return parser


def _report(manifest, stream=None):
    stream = stream or sys.stdout
    for name, ok in manifest.assertions.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}", file=stream)
    for k, v in manifest.summary.items():
        print(f"  {k} = {v}", file=stream)


def _dump_path(cfg, fmt) -> Path:
    p = cfg["path_engine"]
    path = simulate_to_exit(tuple(p["start"]), p["R"], p["dt"], cfg.seed)
    ts, ps = path.polyline()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    data = np.column_stack([ts, ps])
    if fmt == "npy":
        target = out / f"path_{cfg.seed}.npy"
        np.save(target, data)
    else:
        target = out / f"path_{cfg.seed}.csv"
        np.savetxt(target, data, delimiter=",", header="t,x,y", comments="", fmt="%.17g")
    return target


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print("\n".join(EXPERIMENTS))
        return EXIT_PASS
    try:
        experiment = args.command if args.command in EXPERIMENTS else None
        cfg = load_config(args.config, experiment, args.seed, args.threads, args.out)
        if args.command == "dump-path":
            print(_dump_path(cfg, args.format))
            return EXIT_PASS
        manifest, _ = run(cfg, write=args.command != "verify")
    except ConfigError as e:
        print(f"bmlab: config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ExperimentError, BMLabError) as e:
        print(f"bmlab: {e}", file=sys.stderr)
        return EXIT_USAGE
    _report(manifest)
    return EXIT_PASS if manifest.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
