"""Command-line entry point.

Subcommands:
  run      execute a named preset or a scenario file and emit series,
           aggregates, figures, and a summary JSON
  compare  paired run of the epidemic and random gossip target strategies
  presets  list the available presets

Exit codes: 0 on success, 1 for configuration problems, 2 when a runtime
invariant check fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import ConfigError, WorldConfig, parse_config
from .engine import GetTreeInvariantError, PhaseError
from .presets import PRESETS, adhoc_preset, get_preset
from .report import compare_strategies, run_experiment, write_comparison

OUT_ENV = "GOSSIPSTREAM_OUT"
DEFAULT_OUT = "out"


def _add_common(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", metavar="NAME",
                        help="named experiment preset (see 'presets')")
    source.add_argument("--config", metavar="PATH",
                        help="scenario file with 'key = value' lines")
    parser.add_argument("--out", metavar="DIR",
                        default=os.environ.get(OUT_ENV, DEFAULT_OUT),
                        help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    seeds = parser.add_mutually_exclusive_group()
    seeds.add_argument("--seeds", type=int, metavar="N",
                       help="run seeds 1..N")
    seeds.add_argument("--seed-list", metavar="S1,S2,...",
                       help="run exactly these comma-separated seeds")
    parser.add_argument("--jobs", type=int, default=1, metavar="K",
                        help="parallel worker processes (default 1)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="per-run series format (default csv)")
    parser.add_argument("--no-plots", action="store_true",
                        help="skip figure rendering")


def _seeds_from(args: argparse.Namespace) -> tuple[int, ...] | None:
    if args.seed_list:
        try:
            return tuple(int(s) for s in args.seed_list.split(",") if s.strip())
        except ValueError:
            raise ConfigError([f"--seed-list expects integers, got {args.seed_list!r}"])
    if args.seeds is not None:
        if args.seeds < 1:
            raise ConfigError([f"--seeds must be >= 1, got {args.seeds}"])
        return tuple(range(1, args.seeds + 1))
    return None


def _load_config(path: str) -> WorldConfig:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError([f"cannot read config {path!r}: {err}"]) from None
    return parse_config(text)


def _cmd_run(args: argparse.Namespace) -> int:
    seeds = _seeds_from(args)
    if args.preset:
        try:
            preset = get_preset(args.preset)
        except KeyError as err:
            raise ConfigError([str(err.args[0])]) from None
    else:
        config = _load_config(args.config)
        preset = adhoc_preset(config, name=Path(args.config).stem,
                              seeds=seeds or (config.seed,))
    payload = run_experiment(preset, args.out, seeds=seeds, jobs=args.jobs,
                             fmt=args.format, plots=not args.no_plots)
    print(json.dumps({"preset": payload["preset"],
                      "labels": sorted(payload["labels"]),
                      "files": len(payload["files"]),
                      "out": str(Path(args.out) / preset.name)}, indent=2))
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    seeds = _seeds_from(args) or (1, 2, 3, 4, 5)
    if args.preset:
        try:
            preset = get_preset(args.preset)
        except KeyError as err:
            raise ConfigError([str(err.args[0])]) from None
        _, _, config = next(iter(preset.configs((seeds[0],))))
    else:
        config = _load_config(args.config)
    comparison = compare_strategies(config, seeds, jobs=args.jobs)
    out = Path(args.out) / "compare"
    write_comparison(out, comparison, plots=not args.no_plots)
    print(json.dumps(comparison["summary"], indent=2))
    return 0


def _cmd_presets(_args: argparse.Namespace) -> int:
    width = max(len(name) for name in PRESETS)
    for name in sorted(PRESETS):
        preset = PRESETS[name]
        print(f"{name:<{width}}  {preset.description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gossipstream",
        description="Gossip chunk-replication simulator for clustered mobile networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a preset or scenario file")
    _add_common(run_p)
    run_p.set_defaults(func=_cmd_run)

    cmp_p = sub.add_parser("compare", help="epidemic vs random strategy comparison")
    _add_common(cmp_p)
    cmp_p.set_defaults(func=_cmd_compare)

    lst_p = sub.add_parser("presets", help="list available presets")
    lst_p.set_defaults(func=_cmd_presets)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 1
    except (PhaseError, GetTreeInvariantError) as err:
        print(f"runtime invariant violation: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
