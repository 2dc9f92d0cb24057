"""Command line entry point: ``irsched run`` and ``irsched codebook``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ScenarioConfig
from .harness import emit_csv, emit_plots, run_experiment, stream, _CODEBOOK
from .irs import Codebook, build_codebook
from .sched import SCHEDULERS


def _scalar(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_sweep(items) -> dict:
    sweep = {}
    for item in items or []:
        name, _, values = item.partition("=")
        if not values:
            raise argparse.ArgumentTypeError(f"bad sweep {item!r}; expected param=v1,v2,...")
        sweep[name.strip()] = [_scalar(v.strip()) for v in values.split(",")]
    return sweep


def _load_config(args) -> ScenarioConfig:
    cfg = ScenarioConfig.from_json(args.config) if args.config else ScenarioConfig.desk()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def cmd_run(args) -> int:
    cfg = _load_config(args)
    schedulers = [s.strip() for s in args.schedulers.split(",") if s.strip()]
    unknown = set(schedulers) - set(SCHEDULERS)
    if unknown:
        print(f"unknown schedulers: {sorted(unknown)}", file=sys.stderr)
        return 2
    codebook = None if args.codebook == "build" else Codebook.load(args.codebook)
    reports = run_experiment(cfg, schedulers, parse_sweep(args.sweep), codebook=codebook, mode=args.mode)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emit_csv(reports, out / "summary.csv")
    timing = {rep.label or "base": {n: sum(m.wall_s) / len(m.wall_s) for n, m in rep.schedulers.items()}
              for rep in reports}
    (out / "timing.json").write_text(json.dumps(timing, indent=2) + "\n")
    if reports and not args.no_plots:
        emit_plots(reports, out)

    n_bad = 0
    for rep in reports:
        for name, m in rep.schedulers.items():
            print(f"{rep.label or 'base':>24s}  {name:>10s}  R = {m.mean:.6g} +- {m.stderr:.2g}")
            for v in m.violations:
                print(f"VIOLATION {rep.label} {name}: {v}", file=sys.stderr)
            n_bad += len(m.violations)
    return 1 if n_bad else 0


def cmd_codebook(args) -> int:
    cfg = _load_config(args)
    cb = build_codebook(cfg, stream(cfg.seed, _CODEBOOK))
    cb.save(args.out)
    print(f"wrote {len(cb)} codewords (b_q={cb.b_q}, N_I={cb.n_irs}) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="irsched", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Monte Carlo sweep")
    run.add_argument("--config", help="scenario JSON (default: desk profile)")
    run.add_argument("--sweep", action="append", metavar="PARAM=V1,V2",
                     help="sweep a config field; repeat for a grid (irs_shape=4x8,8x8 is accepted)")
    run.add_argument("--schedulers", default="gmax,da,uoscbc,ga")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--codebook", default="build", help="codebook JSON file, or 'build'")
    run.add_argument("--seed", type=int)
    run.add_argument("--mode", choices=("exhaustive", "projected"), default="exhaustive")
    run.add_argument("--no-plots", action="store_true")
    run.set_defaults(func=cmd_run)

    cb = sub.add_parser("codebook", help="build and save a cell-specific codebook")
    cb.add_argument("--config")
    cb.add_argument("--seed", type=int)
    cb.add_argument("--out", required=True)
    cb.set_defaults(func=cmd_codebook)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
