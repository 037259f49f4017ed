"""Seeded experiment batches, dataset files, analyses and strategy comparisons."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import __version__
from .evolution import RNG_ALGORITHM, GEConfig, RunRecord, run
from .lsystem import TurtleConfig
from .restart import (
    BudgetedRun,
    NoRestart,
    RestartOutcome,
    RestartStrategy,
    mix_seed,
    parse_strategy,
    run_with_restarts,
)
from .tailstats import (
    R_GRID,
    RunSample,
    TailError,
    central_moments,
    ecdf,
    hill_hall_alpha,
    kurtosis,
    regression_alpha,
    running_mean,
    summary,
    tail_loglog,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

RUN_COLUMNS = ("seed", "generations", "censored", "best_fitness", "best_phenotype")
RESTART_COLUMNS = ("master_seed", "total_generations", "restarts", "succeeded", "winning_seed")
MIN_OBSERVED = 50


class ConfigError(ValueError):
    pass


def default_workers() -> int:
    env = os.environ.get("FRACTAL_GE_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExperimentConfig:
    ge: GEConfig = field(default_factory=GEConfig)
    n_seeds: int = 1000
    base_seed: int = 0
    strategy: RestartStrategy = field(default_factory=NoRestart)
    output_path: str | None = None
    parallel_workers: int = field(default_factory=default_workers)
    # total generation cap per master seed in strategy mode; None means ge.tau
    global_cap: int | None = None

    def __post_init__(self):
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")
        if self.parallel_workers < 1:
            raise ConfigError("parallel_workers must be >= 1")
        if self.global_cap is not None and self.global_cap < 1:
            raise ConfigError("global_cap must be >= 1")

    @property
    def cap(self) -> int:
        return self.ge.tau if self.global_cap is None else self.global_cap

    @property
    def restart_mode(self) -> bool:
        return not isinstance(self.strategy, NoRestart)

    def seeds(self) -> list[int]:
        return [mix_seed(self.base_seed, i) for i in range(self.n_seeds)]

    def snapshot(self) -> dict:
        return {
            "ge": self.ge.to_dict(),
            "n_seeds": self.n_seeds,
            "base_seed": self.base_seed,
            "strategy": str(self.strategy),
            "global_cap": self.cap,
        }

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        """Build from a flat key-value mapping (GE and experiment keys mixed)."""
        ge_keys = {f.name for f in fields(GEConfig)}
        ex_keys = {f.name for f in fields(cls)} - {"ge"}
        unknown = set(data) - ge_keys - ex_keys - {"dimension"}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        ge_data = {k: v for k, v in data.items() if k in ge_keys}
        if "dimension" in data:
            ge_data["target_dimension"] = data["dimension"]
        if "angle" in ge_data:
            ge_data["angle"] = TurtleConfig.parse(str(ge_data["angle"]))
        ex_data = {k: v for k, v in data.items() if k in ex_keys}
        if "strategy" in ex_data:
            ex_data["strategy"] = parse_strategy(str(ex_data["strategy"]))
        try:
            return cls(ge=GEConfig(**ge_data), **ex_data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str | os.PathLike | None, overrides: dict | None = None) -> ExperimentConfig:
    data: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig.from_mapping(data)


# --- single jobs (module level so they pickle) ------------------------------

def ge_budgeted_run(ge: GEConfig) -> BudgetedRun:
    def attempt(seed: int, budget: int) -> int | None:
        rec = run(ge, seed, budget)
        return None if rec.censored else rec.generations
    return attempt


def _run_job(args: tuple[GEConfig, int]) -> RunRecord:
    ge, seed = args
    return run(ge, seed)


def _restart_job(args: tuple[GEConfig, RestartStrategy, int, int]) -> RestartOutcome:
    ge, strategy, master, cap = args
    return run_with_restarts(ge_budgeted_run(ge), strategy, master, cap)


# --- CSV rows ----------------------------------------------------------------

def run_row(rec: RunRecord) -> list[str]:
    return [str(rec.seed), str(rec.generations), str(int(rec.censored)), repr(float(rec.best_fitness)), rec.best_phenotype]


def restart_row(seed: int, out: RestartOutcome) -> list[str]:
    return [
        str(seed),
        str(out.total_generations),
        str(out.restarts_used),
        str(int(out.succeeded)),
        "" if out.winning_seed is None else str(out.winning_seed),
    ]


def _write_csv_row(fh, row: Sequence[str]) -> None:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(row)
    fh.write(buf.getvalue())


@dataclass
class RunDataset:
    config: dict
    rows: list[dict]
    restart_mode: bool = False
    tool_version: str = __version__
    rng_algorithm: str = RNG_ALGORITHM

    def runtimes(self) -> tuple[list[float], list[bool]]:
        """Per-row cost and censorship flag, in seed order."""
        if self.restart_mode:
            return ([float(r["total_generations"]) for r in self.rows],
                    [not int(r["succeeded"]) for r in self.rows])
        return ([float(r["generations"]) for r in self.rows],
                [bool(int(r["censored"])) for r in self.rows])

    def sample(self) -> RunSample:
        values, flags = self.runtimes()
        tau = None
        if not self.restart_mode and self.config:
            tau = self.config.get("ge", {}).get("tau")
        return RunSample.from_values(values, flags, tau)


def meta_path(csv_path: str | os.PathLike) -> Path:
    return Path(str(csv_path) + ".meta.json")


def read_dataset(path: str | os.PathLike) -> RunDataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        rows = list(reader)
    if header == RUN_COLUMNS:
        restart_mode = False
    elif header == RESTART_COLUMNS:
        restart_mode = True
    else:
        raise ConfigError(f"{path}: unrecognised CSV header {header}")
    meta = {}
    mp = meta_path(path)
    if mp.exists():
        meta = json.loads(mp.read_text(encoding="utf-8"))
    return RunDataset(
        meta.get("config", {}),
        rows,
        restart_mode,
        meta.get("tool_version", __version__),
        meta.get("rng_algorithm", RNG_ALGORITHM),
    )


def _map(func: Callable, jobs: list, workers: int) -> Iterator:
    if workers <= 1 or len(jobs) <= 1:
        return map(func, jobs)
    pool = ProcessPoolExecutor(max_workers=workers)
    # executor.map yields in submission order, which keeps rows in seed order
    it = pool.map(func, jobs, chunksize=1)

    def gen():
        try:
            yield from it
        finally:
            pool.shutdown(cancel_futures=True)
    return gen()


def run_experiment(config: ExperimentConfig, progress: Callable[[int, int], None] | None = None) -> RunDataset:
    """Run every seed of ``config``; with an output path, rows stream to CSV.

    An existing output file with the right header is resumed: its rows are
    kept and only the missing seeds are run.
    """
    seeds = config.seeds()
    columns = RESTART_COLUMNS if config.restart_mode else RUN_COLUMNS
    rows: list[dict] = []
    fh = None
    if config.output_path is not None:
        out = Path(config.output_path)
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            if out.exists() and out.stat().st_size > 0:
                _drop_torn_line(out)
                existing = read_dataset(out)
                key = columns[0]
                for row, seed in zip(existing.rows, seeds):
                    if int(row[key]) != seed:
                        raise ConfigError(f"{out}: existing rows do not match this configuration")
                rows = existing.rows[: len(seeds)]
                _truncate_to_rows(out, len(rows))
                fh = open(out, "a", encoding="utf-8", newline="")
            else:
                fh = open(out, "w", encoding="utf-8", newline="")
                _write_csv_row(fh, columns)
            meta_path(out).write_text(json.dumps({
                "config": config.snapshot(),
                "tool_version": __version__,
                "rng_algorithm": RNG_ALGORITHM,
            }, indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {out}: {exc}") from exc
        if rows:
            log.info("resuming %s: %d of %d seeds present", out, len(rows), len(seeds))

    todo = seeds[len(rows):]
    if config.restart_mode:
        jobs = [(config.ge, config.strategy, s, config.cap) for s in todo]
        results = _map(_restart_job, jobs, config.parallel_workers)
    else:
        jobs = [(config.ge, s) for s in todo]
        results = _map(_run_job, jobs, config.parallel_workers)
    try:
        for seed, result in zip(todo, results):
            row = restart_row(seed, result) if config.restart_mode else run_row(result)
            rows.append(dict(zip(columns, row)))
            if fh is not None:
                _write_csv_row(fh, row)
                fh.flush()
            if progress is not None:
                progress(len(rows), len(seeds))
    finally:
        if fh is not None:
            fh.close()
    return RunDataset(config.snapshot(), rows, config.restart_mode)


def _drop_torn_line(path: Path) -> None:
    data = path.read_bytes()
    if not data.endswith(b"\n"):
        path.write_bytes(data[: data.rfind(b"\n") + 1])


def _truncate_to_rows(path: Path, n_rows: int) -> None:
    # drop anything after the header plus n_rows complete lines (e.g. a torn last line)
    data = path.read_bytes()
    lines = data.split(b"\n")
    keep = b"\n".join(lines[: n_rows + 1]) + b"\n"
    if keep != data:
        path.write_bytes(keep)


# --- analysis ----------------------------------------------------------------

def _estimate_block(est) -> dict:
    return {
        "alpha": float(est.alpha) if math.isfinite(est.alpha) else None,
        "r": int(est.r),
        "heavy_tailed": bool(est.heavy_tailed),
        "evidence": bool(est.evidence),
    }


def analyze(dataset: RunDataset | RunSample, r_fractions: Sequence[float] = R_GRID) -> dict:
    """Tail analysis report for a dataset (plain JSON-serialisable dict)."""
    if isinstance(dataset, RunDataset):
        sample = dataset.sample()
        arrival, flags = dataset.runtimes()
        arrival_observed = [v for v, c in zip(arrival, flags) if not c]
        tau = sample.tau
    else:
        sample = dataset
        arrival_observed = list(sample.observed)
        tau = sample.tau
    k = sample.total
    report: dict = {
        "n_total": k,
        "n_observed": sample.n,
        "n_censored": sample.censored,
        "observed_percent": 100.0 * sample.n / k if k else 0.0,
        "censored_percent": 100.0 * sample.censored / k if k else 0.0,
        "tau": tau,
    }
    if sample.n < MIN_OBSERVED:
        report["insufficient_data"] = {
            "reason": f"{sample.n} observed runs, at least {MIN_OBSERVED} required",
            "n_observed": sample.n,
        }
        return report

    estimates = []
    for frac in r_fractions:
        block: dict = {"r_fraction": frac}
        for name, fn in (("hill_hall", hill_hall_alpha), ("regression", regression_alpha)):
            try:
                block[name] = _estimate_block(fn(sample, frac))
            except TailError as exc:
                block[name] = {"error": str(exc)}
        estimates.append(block)
    report["estimates"] = estimates
    hh = [b["hill_hall"] for b in estimates if "alpha" in b["hill_hall"]]
    report["heavy_tailed_all_r"] = bool(hh) and all(b["heavy_tailed"] for b in hh)

    observed = list(sample.observed)
    mu2, mu4 = central_moments(observed)
    try:
        kurt = kurtosis(observed)
    except TailError:
        kurt = None
    report["moments"] = {"mu2": mu2, "mu4": mu4, "kurtosis": kurt}
    report["summary"] = summary(observed)
    if tau is not None and sample.censored:
        report["summary_censored_at_tau"] = summary(observed + [float(tau)] * sample.censored)
        report["censored_mean"] = float(np.mean(observed + [float(tau)] * sample.censored))
    report["ecdf"] = ecdf(observed)
    report["tail_loglog"] = tail_loglog(sample, max(r_fractions))
    report["running_mean"] = running_mean(arrival_observed)
    return report


def write_plot_files(report: dict, directory: str | os.PathLike, label: str) -> list[Path]:
    """CSV data files for ECDF, log-log tail and running-mean plots."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, header, rows in (
        ("tail_loglog", ("log_x", "log_survival"), report.get("tail_loglog")),
        ("ecdf", ("x", "F"), report.get("ecdf")),
        ("running_mean", ("n", "mean"), [(i + 1, m) for i, m in enumerate(report.get("running_mean") or [])]),
    ):
        if not rows:
            continue
        path = directory / f"{name}_{label}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            _write_csv_row(fh, header)
            for row in rows:
                _write_csv_row(fh, [repr(v) if isinstance(v, float) else str(v) for v in row])
        written.append(path)
    return written


# --- strategy comparison -----------------------------------------------------

@dataclass(frozen=True)
class StrategyStats:
    strategy: str
    mean_cost: float
    median_cost: float
    success_rate: float
    restarts_per_success: float
    n: int

    def as_row(self) -> list[str]:
        return [self.strategy, repr(self.mean_cost), repr(self.median_cost), repr(self.success_rate),
                repr(self.restarts_per_success), str(self.n)]


COMPARE_COLUMNS = ("strategy", "mean_cost", "median_cost", "success_rate", "restarts_per_success", "n")


def strategy_stats(strategy: RestartStrategy, outcomes: Sequence[RestartOutcome]) -> StrategyStats:
    costs = np.array([o.total_generations for o in outcomes], dtype=float)
    wins = sum(o.succeeded for o in outcomes)
    restarts = sum(o.restarts_used for o in outcomes)
    return StrategyStats(
        str(strategy),
        float(costs.mean()),
        float(np.median(costs)),
        wins / len(outcomes),
        restarts / wins if wins else math.inf,
        len(outcomes),
    )


def compare_with_model(
    model: BudgetedRun,
    strategies: Sequence[RestartStrategy],
    master_seeds: Iterable[int],
    global_cap: int,
) -> list[StrategyStats]:
    """Restart every master seed under each strategy on one runtime model."""
    master_seeds = list(master_seeds)
    return [
        strategy_stats(s, [run_with_restarts(model, s, m, global_cap) for m in master_seeds])
        for s in strategies
    ]


def compare_strategies(
    config: ExperimentConfig,
    strategies: Sequence[RestartStrategy],
    n_seeds: int | None = None,
) -> list[StrategyStats]:
    """Compare restart strategies on the GE search itself."""
    if len(strategies) < 2:
        raise ConfigError("compare needs at least two strategies")
    n = config.n_seeds if n_seeds is None else n_seeds
    masters = [mix_seed(config.base_seed, i) for i in range(n)]
    out = []
    for s in strategies:
        jobs = [(config.ge, s, m, config.cap) for m in masters]
        outcomes = list(_map(_restart_job, jobs, config.parallel_workers))
        out.append(strategy_stats(s, outcomes))
    return out


def format_table(stats: Sequence[StrategyStats]) -> str:
    head = f"{'strategy':<14} {'% solved':>9} {'average cost':>14} {'median':>10} {'restarts/success':>17}"
    lines = [head, "-" * len(head)]
    for s in stats:
        lines.append(
            f"{s.strategy:<14} {100 * s.success_rate:>8.1f}% {s.mean_cost:>14.4f} {s.median_cost:>10.1f} {s.restarts_per_success:>17.2f}"
        )
    return "\n".join(lines)


def write_comparison(stats: Sequence[StrategyStats], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_csv_row(fh, COMPARE_COLUMNS)
        for s in stats:
            _write_csv_row(fh, s.as_row())
