"""Command-line entry point: ``quadevo {evolve,reevaluate,analyze,plot}``.

Exit codes: 0 success, 1 completed with a warning (nothing to do),
2 configuration error, 3 input/output error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .genome import DomainError

EXIT_OK, EXIT_WARN, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quadevo", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="INI experiment config")
        p.add_argument("--out", type=Path, help="output directory (holds the run archives)")
        return p

    ev = common(sub.add_parser("evolve", help="run the seeded evolutionary experiment"))
    ev.add_argument("--seed", type=int, help="base seed; run i uses seed + i")
    ev.add_argument("--voltage", type=float, help="evolve at this voltage only")
    ev.add_argument("--runs", type=int, help="runs per voltage")
    ev.add_argument("--generations", type=int)
    ev.add_argument("--population", type=int)

    re = common(sub.add_parser("reevaluate", help="re-test selected front members at a reduced voltage"))
    re.add_argument("--voltage", type=float, help="voltage for the second round (default 12.0)")
    re.add_argument("--archive", type=Path, action="append",
                    help="archive directory to select from (repeatable); default: highest-voltage runs in --out")
    re.add_argument("--seed", type=int, help="first re-evaluation seed")

    common(sub.add_parser("analyze", help="LDA + Mann-Whitney + Cliff's delta between voltage groups"))
    pl = common(sub.add_parser("plot", help="SVG figures and CSV tables"))
    pl.add_argument("--figures", type=Path, help="figure directory (default <out>/figures)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return _dispatch(args)
    except (harness.ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


def _dispatch(args) -> int:
    overrides = {"out": args.out}
    if args.command == "evolve":
        overrides.update(seed=args.seed, runs=args.runs, generations=args.generations,
                         population=args.population, voltage=args.voltage)
    cfg = harness.load_config(args.config, **overrides)
    out = Path(cfg.output_dir)

    if args.command == "evolve":
        paths = harness.cmd_evolve(cfg)
        for p in paths:
            print(p)
        return EXIT_OK

    if args.command == "reevaluate":
        if args.archive:
            archives = [harness.load_archive(p) for p in args.archive]
        else:
            groups = harness.group_by_voltage(harness.find_archives(out))
            archives = next(iter(groups.values()), [])
        reeval = cfg.reeval
        if args.voltage is not None:
            reeval = replace(reeval, voltage=args.voltage)
        if args.seed is not None:
            reeval = replace(reeval, seed=args.seed)
        if not archives:
            print(f"warning: no archives found in {out}", file=sys.stderr)
            return EXIT_WARN
        report = harness.cmd_reevaluate(archives, cfg.eval, reeval)
        print(harness.write_json(out / "reevaluation.json", report))
        return EXIT_OK

    if args.command == "analyze":
        report = harness.cmd_analyze(harness.find_archives(out))
        print(harness.write_json(out / "analysis.json", report))
        return EXIT_OK

    if args.command == "plot":
        archives = harness.find_archives(out) if out.is_dir() else []
        written = harness.cmd_plot(archives, args.figures or out / "figures")
        if not written:
            print(f"warning: no archives found in {out}; nothing plotted", file=sys.stderr)
            return EXIT_WARN
        for p in written:
            print(p)
        return EXIT_OK
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
