"""Command-line entry point: ``crmap {simulate,map,evaluate,sweep,world}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import experiment, io
from .config import ConfigError, ExperimentConfig, build_config, parse_value, read_config_file
from .sim import corridor_map, corridor_trajectory

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

HELP = {
    "map": "ground-truth map file, or 'corridor' for the built-in world",
    "trajectory": "trajectory file (x y theta per line), or 'corridor'",
    "out": "output file of the subcommand",
    "gamma": "comma-separated inconsistency thresholds",
    "noise_levels": "noise levels for --sweep noise, in multiples of the voxel size",
    "max_range_returns": "keep | no_return | discard readings at the sensor limit",
    "updated_only": "evaluate only voxels observed by at least one ray",
    "jobs": "parallel worker processes for sweeps",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("-v", "--verbose", action="store_true")
    for f in fields(ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type in ("bool", bool):
            p.add_argument(flag, dest=f.name, action="store_const", const=True, default=None,
                           help=HELP.get(f.name))
        else:
            p.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper(),
                           help=HELP.get(f.name, f"default {f.default!r}"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crmap", description="Confidence-rich occupancy mapping experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in [
        ("simulate", "synthesize a JSON-lines scan log from a map and a trajectory"),
        ("map", "build a map from a scan log and dump the per-voxel belief"),
        ("evaluate", "score a belief dump against ground truth"),
        ("sweep", "ISM sweep (48 configs + CRM) or noise sweep table"),
        ("world", "write the built-in corridor map and trajectory files"),
    ]:
        _add_config_flags(sub.add_parser(name, help=text, description=text))
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {}
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name)
        if v is None:
            continue
        overrides[f.name] = v if isinstance(v, bool) else parse_value(f.name, v)
    return build_config(file_values, overrides)


def _world(cfg: ExperimentConfig) -> None:
    out = Path(cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    io.write_map(out / "corridor.map", corridor_map())
    io.write_trajectory(out / "corridor.traj", corridor_trajectory())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "simulate":
            experiment.run_simulate(cfg)
        elif args.command == "map":
            experiment.run_map(cfg)
        elif args.command == "evaluate":
            rep = experiment.run_evaluate(cfg)
            print(io.dumps_json(experiment.report_dict(rep)))
        elif args.command == "sweep":
            experiment.run_sweep(cfg)
        else:
            _world(cfg)
    except (ConfigError, TypeError) as exc:
        print(f"crmap: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except experiment.NumericalFailure as exc:
        print(f"crmap: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (io.DataError, ValueError, OSError) as exc:
        print(f"crmap: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
