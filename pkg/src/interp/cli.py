"""Command line entry point: ``interp run | plot | bounds``."""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import warnings

from . import bounds as bnd
from .core_model import InterpError
from .experiments import PLOT_STYLES, ConfigError, load_config, plot, run

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def _flatten(groups):
    return [item for group in (groups or []) for item in group]


def _cmd_run(args) -> int:
    overrides = _flatten(args.override)
    try:
        cfg = load_config(args.config, overrides, full_scale=args.full_scale)
        changes = {}
        if args.threads is not None:
            changes["threads"] = args.threads
        if args.out is not None:
            changes["output_dir"] = args.out
        if changes:
            cfg = dataclasses.replace(cfg, **changes)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run(cfg)
    print(f"records: {result.records_path}")
    print(f"summary: {result.summary_path}")
    print(f"rows: {result.n_records}  failed: {result.n_failed}")
    if result.over_budget:
        print(f"solver failures {result.failed_fraction:.1%} exceed the 10% budget",
              file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def _cmd_plot(args) -> int:
    try:
        path = plot(args.summary, style=args.style, out_path=args.out,
                    overlay=False if args.no_bounds else None)
    except (InterpError, OSError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(path)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    try:
        p = bnd.BoundParams(args.n, args.d, args.sigma2, args.delta)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        upper = bnd.ideal_mse_upper_gaussian(p, with_flag=True)
        rows = [
            ("ideal_mse_lower", bnd.ideal_mse_lower_gaussian(p), ""),
            ("ideal_mse_upper", upper.value, "vacuous (d <= 4n)" if upper.flagged else ""),
        ]
        if p.d > p.n:
            floor = bnd.parsimonious_floor(p, with_flag=True)
            rows.append(("parsimonious_floor", floor.value,
                         "weak regime (d <= e n)" if floor.flagged else ""))
        else:
            rows.append(("parsimonious_floor", math.nan, "undefined for d <= n"))
    print(f"n={p.n} d={p.d} sigma2={p.sigma2:g} delta={p.delta:g}")
    for name, value, note in rows:
        print(f"{name:20s} {value:.10g}" + (f"  # {note}" if note else ""))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="interp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a sweep from a key = value config file")
    p_run.add_argument("config")
    p_run.add_argument("--override", action="append", nargs="+", metavar="KEY=VALUE")
    p_run.add_argument("--full-scale", action="store_true",
                       help="original problem sizes; no runtime promise")
    p_run.add_argument("--threads", type=int)
    p_run.add_argument("--out", help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_plot = sub.add_parser("plot", help="render summary.csv as SVG")
    p_plot.add_argument("summary")
    p_plot.add_argument("--style", choices=PLOT_STYLES, default="paired")
    p_plot.add_argument("--out")
    p_plot.add_argument("--no-bounds", action="store_true")
    p_plot.set_defaults(func=_cmd_plot)

    p_b = sub.add_parser("bounds", help="print reference curve values")
    p_b.add_argument("--n", type=int, required=True)
    p_b.add_argument("--d", type=int, required=True)
    p_b.add_argument("--sigma2", type=float, default=1.0)
    p_b.add_argument("--delta", type=float, default=0.5)
    p_b.set_defaults(func=_cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which matches the config error code
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
