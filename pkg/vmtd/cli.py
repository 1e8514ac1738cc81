"""
Command line interface::

    vmtd analyze --env twostate --mode on
    vmtd evaluate --config configs/twostate-off.yaml --runs 10
    vmtd control --config configs/cliffwalking.yaml --out results/cliff.csv
    vmtd plot --in results/cliff.csv --out plots/cliff
"""

import argparse
import logging
import os
import sys
import typing

from . import __version__
from . import harness
from .config import ExperimentConfig
from .config import load_config
from .exceptions import VMTDError


logger = logging.getLogger("vmtd")


def _add_run_flags(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--config", required=True, help="YAML or JSON experiment config."
    )
    parser.add_argument("--seed", type=int, help="Base seed.")
    parser.add_argument("--runs", type=int, help="Independent runs.")
    parser.add_argument(
        "--horizon", type=int, help="Steps (evaluation) or episodes (control)."
    )
    parser.add_argument("--workers", type=int, help="Worker processes.")
    parser.add_argument("--out", help="CSV file for the aggregated curves.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vmtd",
        description="Variance-minimizing temporal-difference learning.",
    )
    parser.add_argument(
        "--version", action="version", version="%(prog)s " + __version__
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument(
        "-v", "--verbose", action="store_true", help="Debug logging."
    )
    verbosity.add_argument(
        "-q", "--quiet", action="store_true", help="Warnings and errors only."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser(
        "analyze", help="Key-matrix eigenvalues and fixed points."
    )
    analyze.add_argument("--env", default="twostate")
    analyze.add_argument("--mode", choices=("on", "off", "both"))
    analyze.add_argument(
        "--config", help="Config with an explicit 'setting' to analyze."
    )
    analyze.add_argument("--out", help="CSV file for the table.")

    evaluate = commands.add_parser(
        "evaluate", help="Policy-evaluation learning curves."
    )
    _add_run_flags(evaluate)

    control = commands.add_parser("control", help="Control learning curves.")
    _add_run_flags(control)

    plot = commands.add_parser(
        "plot", help="Per-algorithm plot data (and a PNG) from a curve CSV."
    )
    plot.add_argument("--in", dest="input", required=True)
    plot.add_argument("--out", required=True, help="Output directory.")
    plot.add_argument("--ylabel", default="")
    plot.add_argument(
        "--no-png", action="store_true", help="Only write the plot data."
    )
    return parser


def _configure_logging(args):
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s"
    )


def _analyze(args) -> int:
    if args.config:
        config = load_config(args.config)
        config = _as_analyze(config)
    else:
        config = ExperimentConfig(kind="analyze", env=args.env)
    modes = None
    if args.mode and args.mode != "both":
        modes = [args.mode]
    table = harness.run_analyze(config, modes=modes)
    print(harness.format_table(table))
    if args.out:
        harness.write_table(table, args.out)
        logger.info("Wrote %s", args.out)
    return 0


def _as_analyze(config: ExperimentConfig) -> ExperimentConfig:
    if config.kind == "analyze":
        return config
    return ExperimentConfig.from_dict(
        {
            "kind": "analyze",
            "env": config.env,
            "setting": config.setting,
            "mode": config.mode,
        }
    )


def _run(args, kind: str) -> int:
    config = load_config(args.config)
    if config.kind != kind:
        raise VMTDError(
            "%s is a %s config, not %s" % (args.config, config.kind, kind)
        )
    config = config.with_overrides(
        seed=args.seed,
        runs=args.runs,
        horizon=args.horizon,
        workers=args.workers,
        out=args.out,
    )
    if kind == "control":
        summaries = harness.run_control(config)
    else:
        summaries = harness.run_evaluation(config)
    for summary in summaries:
        print(
            "%-8s final mean %.6g (std %.6g, %d runs)"
            % (
                summary.algorithm,
                summary.mean[-1],
                summary.std[-1],
                summary.n_runs,
            )
        )
    if config.out:
        harness.write_csv(summaries, config.out)
        logger.info("Wrote %s", config.out)
    return 0


def _plot(args) -> int:
    summaries = harness.read_csv(args.input)
    written = harness.emit_plot_data(summaries, args.out, metric=args.ylabel)
    if not args.no_png:
        stem = os.path.splitext(os.path.basename(args.input))[0]
        png = os.path.join(args.out, stem + ".png")
        harness.plot_curves(summaries, png, ylabel=args.ylabel)
        written.append(png)
    for path in written:
        logger.info("Wrote %s", path)
    return 0


def main(argv: typing.Optional[typing.List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)
    try:
        if args.command == "analyze":
            return _analyze(args)
        if args.command == "plot":
            return _plot(args)
        if args.command == "control":
            return _run(args, "control")
        return _run(args, "evaluation")
    except (VMTDError, OSError) as err:
        print("vmtd: error: %s" % err, file=sys.stderr)
        return 1
