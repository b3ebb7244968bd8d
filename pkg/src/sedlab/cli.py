"""``sedlab`` command line: ``run`` and ``sweep`` over JSON experiment configs."""

from __future__ import annotations

import argparse
import sys

from . import experiments
from ._version import __version__
from .errors import ConfigParseError, EmptySweep, ExperimentError, MultipleSweptAxes


def _common(p):
    p.add_argument("config", help="experiment config (JSON)")
    p.add_argument("--out", default=None,
                   help=f"output directory (default: ${experiments.ENV_OUT} or ./{experiments.DEFAULT_OUT})")
    p.add_argument("--threads", type=int, default=1, help="worker threads for ensembles")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--check", action="store_true", help="exit 1 if any tolerance check fails")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sedlab", description="Stochastic electrodynamics experiments.")
    parser.add_argument("--version", action="version", version=f"sedlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("run", help="run one experiment"))
    sp = sub.add_parser("sweep", help="run an experiment over one list-valued setting")
    _common(sp)
    sp.add_argument("--axis", default=None, help="swept setting, dotted path or leaf name")
    return parser


def _summary(m):
    flag = "PASS" if m.passed else "FAIL"
    lines = [f"{m.experiment} [{flag}] hash={m.config_hash[:12]} seed={m.seed} wall={m.wall_time:.2f}s"]
    for name, c in sorted(m.checks.items()):
        lines.append(f"  {'ok  ' if c['passed'] else 'FAIL'} {name}: {c['value']:.6g} {c['rule']} {c['tolerance']}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = experiments.load_config(args.config, seed=args.seed)
            manifest = experiments.run(cfg, args.out, threads=args.threads)
            print(_summary(manifest))
            passed = manifest.passed
        else:
            with open(args.config) as fh:
                text = fh.read()
            res = experiments.sweep(text, args.axis, args.out, threads=args.threads, seed=args.seed)
            for v, m in zip(res.values, res.manifests):
                print(f"{res.axis}={v}")
                print(_summary(m))
            for k, s in sorted(res.slopes.items()):
                print(f"  slope d log({k}) / d log({res.axis}) = {s:.4f}")
            print(f"combined CSV: {res.csv_path}")
            passed = res.passed
    except (ConfigParseError, MultipleSweptAxes, EmptySweep, ExperimentError, OSError) as exc:
        print(f"sedlab: error: {exc}", file=sys.stderr)
        return 2
    if args.check and not passed:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
