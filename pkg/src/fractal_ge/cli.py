"""Command line entry point ``fractal-ge``.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dimension import DimensionError, dimension
from .harness import (
    ConfigError,
    analyze,
    compare_strategies,
    format_table,
    load_config,
    read_dataset,
    run_experiment,
    write_comparison,
    write_plot_files,
)
from .lsystem import LSystemError, derive, load_lsystem, render_svg, turtle_walk
from .restart import parse_strategy
from .tailstats import R_GRID

EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fractal-ge", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a seeded batch of GE searches")
    r.add_argument("--config")
    r.add_argument("--dimension", type=float)
    r.add_argument("--angle", help="angle step as a fraction of a full turn, e.g. 1/6")
    r.add_argument("--seeds", type=int, dest="n_seeds")
    r.add_argument("--base-seed", type=int)
    r.add_argument("--tau", type=int)
    r.add_argument("--strategy")
    r.add_argument("--workers", type=int, dest="parallel_workers")
    r.add_argument("--out", required=True)

    a = sub.add_parser("analyze", help="tail analysis of a dataset CSV")
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--r", type=_float_list, default=[100 * f for f in R_GRID],
                   help="truncation levels in percent, comma separated")
    a.add_argument("--out", required=True)
    a.add_argument("--label", help="suffix for the plot data files (default: target dimension)")

    c = sub.add_parser("compare", help="compare restart strategies on the GE search")
    c.add_argument("--config")
    c.add_argument("--strategies", required=True)
    c.add_argument("--dimension", type=float)
    c.add_argument("--angle")
    c.add_argument("--seeds", type=int, dest="n_seeds")
    c.add_argument("--tau", type=int)
    c.add_argument("--workers", type=int, dest="parallel_workers")
    c.add_argument("--out", required=True)

    d = sub.add_parser("dim", help="fractal dimension of an L-system file")
    d.add_argument("file")

    v = sub.add_parser("render", help="render an L-system derivation as SVG")
    v.add_argument("file")
    v.add_argument("--derivations", type=int, default=4)
    v.add_argument("--out", required=True)
    return p


def _overrides(args) -> dict:
    keys = ("dimension", "angle", "n_seeds", "base_seed", "tau", "strategy", "parallel_workers")
    return {k: getattr(args, k, None) for k in keys}


def _cmd_run(args) -> int:
    overrides = _overrides(args)
    overrides["output_path"] = args.out
    config = load_config(args.config, overrides)

    def progress(done, total):
        logging.getLogger(__name__).info("%d/%d seeds", done, total)

    dataset = run_experiment(config, progress)
    values, flags = dataset.runtimes()
    print(f"{len(dataset.rows)} rows written to {args.out} ({sum(flags)} censored)")
    return 0


def _cmd_analyze(args) -> int:
    dataset = read_dataset(args.input)
    report = analyze(dataset, [r / 100 for r in args.r])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report["source"] = str(args.input)
    report["config"] = dataset.config
    out.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    label = args.label or str(dataset.config.get("ge", {}).get("target_dimension", "data"))
    write_plot_files(report, out.parent, label)
    if "insufficient_data" in report:
        print(f"insufficient data: {report['insufficient_data']['reason']}")
    else:
        for block in report["estimates"]:
            hh, rg = block["hill_hall"], block["regression"]
            print(f"r={100 * block['r_fraction']:g}%  hill-hall={hh.get('alpha')}  regression={rg.get('alpha')}")
    return 0


def _cmd_compare(args) -> int:
    config = load_config(args.config, _overrides(args))
    try:
        strategies = [parse_strategy(s) for s in args.strategies.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    stats = compare_strategies(config, strategies)
    write_comparison(stats, args.out)
    print(format_table(stats))
    return 0


def _read_system(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    return load_lsystem(text)


def _cmd_dim(args) -> int:
    system, config = _read_system(args.file)
    result = dimension(system, config)
    print(f"dimension {result.value!r}")
    print(f"N {result.draw_count}")
    print(f"d {result.distance!r}")
    print(f"derivations_used {result.derivations_used}")
    if result.overlapping:
        print(f"distinct_segments {result.segments}")
    if not result.converged:
        print("converged false")
    return 0


def _cmd_render(args) -> int:
    system, config = _read_system(args.file)
    if args.derivations < 0:
        raise UsageError("--derivations must be >= 0")
    word = derive(system, system.axiom, args.derivations)
    svg = render_svg(turtle_walk(word, system, config))
    Path(args.out).write_text(svg, encoding="utf-8")
    return 0


COMMANDS = {
    "run": _cmd_run,
    "analyze": _cmd_analyze,
    "compare": _cmd_compare,
    "dim": _cmd_dim,
    "render": _cmd_render,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"fractal-ge: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LSystemError, DimensionError, OSError, ValueError) as exc:
        print(f"fractal-ge: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
