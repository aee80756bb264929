"""Experiment execution and emission: CSV/JSON series, aggregates, figures.

Per (sweep value, seed) run this writes the raw metric series, then a
seed-aggregated series (mean and standard deviation per tick), a summary
JSON, and one rendered figure per requested output column.  Emission is
byte-stable: equal inputs produce identical files.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from . import engine
from .analytics import METRIC_COLUMNS, MetricsRow
from .config import WorldConfig, with_overrides
from .presets import ExperimentPreset


def write_metrics_csv(path: Path, rows: Sequence[MetricsRow]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRIC_COLUMNS)
        for row in rows:
            writer.writerow([getattr(row, col) for col in METRIC_COLUMNS])


def write_metrics_json(path: Path, rows: Sequence[MetricsRow]) -> None:
    payload = [asdict(row) for row in rows]
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def aggregate_series(series: Sequence[Sequence[MetricsRow]]) -> list[dict[str, float]]:
    """Per-tick mean and standard deviation across seeds.

    Expects equal-length series (same tick grid); the mean over a single
    series equals that series.
    """
    if not series:
        return []
    length = len(series[0])
    if any(len(s) != length for s in series):
        raise ValueError("metric series must share one tick grid")
    out: list[dict[str, float]] = []
    for t in range(length):
        entry: dict[str, float] = {"tick": series[0][t].tick}
        for col in METRIC_COLUMNS:
            if col == "tick":
                continue
            values = [getattr(s[t], col) for s in series]
            mean = sum(values) / len(values)
            var = sum((v - mean) ** 2 for v in values) / len(values)
            entry[f"{col}_mean"] = mean
            entry[f"{col}_std"] = math.sqrt(var)
        out.append(entry)
    return out


def write_aggregate_csv(path: Path, agg: Sequence[dict[str, float]]) -> None:
    if not agg:
        with open(path, "w", newline="") as handle:
            csv.writer(handle).writerow(["tick"])
        return
    columns = list(agg[0])
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for entry in agg:
            writer.writerow([entry[c] for c in columns])


def render_figure(path: Path, agg_by_label: dict[str, Sequence[dict[str, float]]],
                  column: str, title: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label in sorted(agg_by_label):
        agg = agg_by_label[label]
        ticks = [e["tick"] for e in agg]
        means = [e[f"{column}_mean"] for e in agg]
        stds = [e[f"{column}_std"] for e in agg]
        ax.plot(ticks, means, label=label)
        ax.fill_between(
            ticks,
            [m - s for m, s in zip(means, stds)],
            [m + s for m, s in zip(means, stds)],
            alpha=0.15,
        )
    ax.set_xlabel("tick")
    ax.set_ylabel(column)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _run_one(config: WorldConfig) -> tuple[list[MetricsRow], engine.RunSummary]:
    rows, summary, _world = engine.run(config)
    return rows, summary


def run_experiment(
    preset: ExperimentPreset,
    out_dir: Path | str,
    seeds: tuple[int, ...] | None = None,
    jobs: int = 1,
    fmt: str = "csv",
    plots: bool = True,
) -> dict:
    """Run every (sweep value, seed) pair of a preset and emit its files.

    Returns the summary structure that is also written to summary.json.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    out = Path(out_dir) / preset.name
    out.mkdir(parents=True, exist_ok=True)
    planned = list(preset.configs(seeds))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, [cfg for _, _, cfg in planned]))
    else:
        results = [_run_one(cfg) for _, _, cfg in planned]

    by_label: dict[str, list[tuple[int, list[MetricsRow], engine.RunSummary]]] = {}
    for (label, seed, _cfg), (rows, summary) in zip(planned, results):
        by_label.setdefault(label, []).append((seed, rows, summary))

    emitted: list[str] = []
    agg_by_label: dict[str, list[dict[str, float]]] = {}
    summaries: dict[str, dict] = {}
    for label, runs in by_label.items():
        safe = label.replace("=", "-").replace(".", "_").replace("/", "-")
        for seed, rows, _summary in runs:
            run_path = out / f"{safe}.seed{seed}.{fmt}"
            if fmt == "csv":
                write_metrics_csv(run_path, rows)
            else:
                write_metrics_json(run_path, rows)
            emitted.append(str(run_path))
        agg = aggregate_series([rows for _, rows, _ in runs])
        agg_by_label[label] = agg
        agg_path = out / f"{safe}.aggregate.csv"
        write_aggregate_csv(agg_path, agg)
        emitted.append(str(agg_path))
        summaries[label] = {
            "seeds": [seed for seed, _, _ in runs],
            "mean_sdr": _mean([s.mean_sdr for _, _, s in runs]),
            "min_sdr": min((s.min_sdr for _, _, s in runs), default=1.0),
            "mean_eff": _mean([s.mean_eff for _, _, s in runs]),
            "mean_infected": _mean([s.mean_infected for _, _, s in runs]),
            "completed_files": _mean([float(s.completed_files) for _, _, s in runs]),
            "initiated_sessions": sum(s.initiated_sessions for _, _, s in runs),
            "completed_sessions": sum(s.completed_sessions for _, _, s in runs),
        }

    if plots:
        for column in preset.outputs:
            fig_path = out / f"{column}.png"
            render_figure(fig_path, agg_by_label, column, preset.description)
            emitted.append(str(fig_path))

    payload = {
        "preset": preset.name,
        "description": preset.description,
        "sweep": {"param": preset.sweep_param,
                  "values": list(preset.sweep_values)},
        "labels": summaries,
        "files": sorted(emitted),
    }
    with open(out / "summary.json", "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return payload


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _sign_test_p(wins: int, losses: int) -> float:
    """Two-sided binomial sign test, ties dropped."""
    n = wins + losses
    if n == 0:
        return 1.0
    k = min(wins, losses)
    tail = sum(math.comb(n, j) for j in range(k + 1)) / 2 ** n
    return min(1.0, 2.0 * tail)


def compare_strategies(config: WorldConfig, seeds: Sequence[int],
                       jobs: int = 1) -> dict:
    """Paired epidemic-vs-random comparison on identical seeds.

    Reports per-tick differences (epidemic minus random) of mean infected
    per cluster, SDR and effective throughput, plus a sign-test summary of
    the infected series.
    """
    if not seeds:
        raise ValueError("seeds must be non-empty")
    pairs = []
    for seed in seeds:
        pairs.append(with_overrides(config, seed=seed, strategy="epidemic"))
        pairs.append(with_overrides(config, seed=seed, strategy="random"))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, pairs))
    else:
        results = [_run_one(cfg) for cfg in pairs]

    per_tick: list[dict[str, float]] = []
    ticks = min(len(rows) for rows, _ in results)
    n_seeds = len(seeds)
    wins = losses = 0
    for t in range(ticks):
        epi_inf = _mean([results[2 * i][0][t].infected_mean for i in range(n_seeds)])
        rnd_inf = _mean([results[2 * i + 1][0][t].infected_mean for i in range(n_seeds)])
        epi_sdr = _mean([results[2 * i][0][t].sdr for i in range(n_seeds)])
        rnd_sdr = _mean([results[2 * i + 1][0][t].sdr for i in range(n_seeds)])
        epi_eff = _mean([results[2 * i][0][t].eff for i in range(n_seeds)])
        rnd_eff = _mean([results[2 * i + 1][0][t].eff for i in range(n_seeds)])
        per_tick.append({
            "tick": results[0][0][t].tick,
            "infected_diff": epi_inf - rnd_inf,
            "sdr_diff": epi_sdr - rnd_sdr,
            "eff_diff": epi_eff - rnd_eff,
            "epidemic_infected": epi_inf,
            "random_infected": rnd_inf,
        })
        if epi_inf < rnd_inf:
            wins += 1
        elif epi_inf > rnd_inf:
            losses += 1
    return {
        "seeds": list(seeds),
        "ticks": ticks,
        "per_tick": per_tick,
        "summary": {
            "infected_epidemic_below_random_ticks": wins,
            "infected_epidemic_above_random_ticks": losses,
            "mean_infected_diff": _mean([e["infected_diff"] for e in per_tick]),
            "mean_sdr_diff": _mean([e["sdr_diff"] for e in per_tick]),
            "mean_eff_diff": _mean([e["eff_diff"] for e in per_tick]),
            "sign_test_p": _sign_test_p(wins, losses),
        },
    }


def write_comparison(out_dir: Path | str, comparison: dict,
                     plots: bool = True) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparison.json", "w") as handle:
        json.dump(comparison, handle, indent=2, sort_keys=True)
        handle.write("\n")
    per_tick = comparison["per_tick"]
    with open(out / "comparison.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        if per_tick:
            columns = list(per_tick[0])
            writer.writerow(columns)
            for entry in per_tick:
                writer.writerow([entry[c] for c in columns])
    if plots and per_tick:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        ticks = [e["tick"] for e in per_tick]
        ax.plot(ticks, [e["epidemic_infected"] for e in per_tick],
                label="epidemic selection")
        ax.plot(ticks, [e["random_infected"] for e in per_tick],
                label="random selection")
        ax.set_xlabel("tick")
        ax.set_ylabel("mean infected per cluster")
        ax.set_title("Gossip target selection strategies")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(out / "comparison.png", dpi=120)
        plt.close(fig)
