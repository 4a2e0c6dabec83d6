"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical abort
(blow-up or stiffness).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, Mode, parse_config
from .experiment import (OUTPUT_ROOT_ENV, ExperimentResult, load_run, read_metadata, run_experiment,
                         with_seed, analysis_kwargs)
from .patterns import summarize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3

log = logging.getLogger("chemoswitch")

_COMMAND_MODES = {
    "simulate": (Mode.SIM1D, Mode.SIM2D, Mode.RADIAL),
    "stability": (Mode.STABILITY,),
    "sweep": (Mode.SWEEP,),
    "eigenmap": (Mode.EIGENMAP,),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemoswitch",
        description="Two-phenotype chemotaxis model: stability analysis and simulations.",
        epilog=f"Output goes to --output-root, else ${OUTPUT_ROOT_ENV}, else run.output_dir.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("simulate", "run a Sim1D, Sim2D or Radial config"),
                            ("stability", "linear stability report"),
                            ("sweep", "parameter sweep"),
                            ("eigenmap", "eigenvalue map over (chi, mu)")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", type=Path, help="config file (section.key = value lines)")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--output-root", type=Path, default=None, help="directory that receives <run_id>/")
        if name in ("simulate", "sweep", "stability", "eigenmap"):
            p.add_argument("--plot", action="store_true", help="also render PNG figures (needs matplotlib)")
    p = sub.add_parser("analyze", help="recompute the pattern summary of a finished simulation")
    p.add_argument("run_dir", type=Path)
    p.add_argument("--plot", action="store_true", help="also render PNG figures (needs matplotlib)")
    return parser


def _print_result(result: ExperimentResult) -> None:
    print(f"run_id = {result.run_id}")
    print(f"mode = {result.mode.value}")
    print(f"status = {result.status}")
    if result.message:
        print(f"message = {result.message}")
    print(f"run_dir = {result.run_dir}")
    if result.summary is not None:
        for key, value in result.summary.to_pairs():
            print(f"summary.{key} = {value}")
    if result.report is not None:
        rep = result.report
        print(f"chi_threshold = {rep.chi_threshold if rep.chi_threshold is not None else 'none'}")
        print(f"homogeneous_status = {rep.homogeneous_status}")
        print(f"unstable_modes = {';'.join(str(m) for m in rep.unstable_modes)}")
    if result.run is not None:
        for text in result.run.warnings:
            print(f"warning = {text}")


def _render(result_dir: Path, **kwargs) -> list[Path]:
    try:
        from . import plotting
    except ImportError as exc:  # matplotlib missing
        print(f"warning = plotting unavailable: {exc}", file=sys.stderr)
        return []
    return plotting.render_directory(result_dir, **kwargs)


def _run_command(args) -> int:
    try:
        config = parse_config(args.config)
        allowed = _COMMAND_MODES[args.command]
        if config.mode not in allowed:
            names = ", ".join(m.value for m in allowed)
            raise ConfigError(f"'{args.command}' expects run.mode to be one of {names}, got {config.mode.value}",
                              config.lines.get("run.mode"))
        if args.seed is not None:
            config = with_seed(config, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("running %s (%s)", config.run_id, config.mode.value)
    try:
        result = run_experiment(config, args.output_root)
    except ValueError as exc:
        print(f"config error: {config.run_id}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _print_result(result)
    if getattr(args, "plot", False):
        for path in _render(result.run_dir):
            print(f"figure = {path}")
    if result.aborted:
        print(f"numerical abort in {result.run_id}: {result.message}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def _analyze(args) -> int:
    try:
        meta = read_metadata(args.run_dir)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    mode = meta.get("run.mode", "")
    print(f"run_dir = {args.run_dir}")
    print(f"mode = {mode}")
    if mode in (Mode.SIM1D.value, Mode.SIM2D.value, Mode.RADIAL.value):
        try:
            config, run = load_run(args.run_dir)
        except (ConfigError, ValueError, OSError) as exc:
            print(f"error: cannot load {args.run_dir}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        summary = summarize(run, **analysis_kwargs(config))
        print(f"status = {run.status}")
        for key, value in summary.to_pairs():
            print(f"summary.{key} = {value}")
        for note in summary.notes:
            print(f"note = {note}")
    else:
        for key in sorted(meta):
            if key.startswith(("report.", "result.")):
                print(f"{key} = {meta[key]}")
    if args.plot:
        for path in _render(args.run_dir):
            print(f"figure = {path}")
    status = meta.get("result.status", "completed")
    return EXIT_ABORT if status in ("blowup", "stiff") else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "analyze":
        return _analyze(args)
    return _run_command(args)


if __name__ == "__main__":
    sys.exit(main())
