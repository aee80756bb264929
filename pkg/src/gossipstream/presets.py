"""Named experiment presets: one per figure family of the evaluation.

Each preset sweeps one parameter over a handful of desk-scale values,
optionally crossed with labelled variants, and runs every (value, seed)
pair.  Values here are documented desk-scale defaults; the original
evaluation published no parameter tables, so no numeric axis fidelity is
claimed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .config import WorldConfig, config_from_values


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    sweep_param: str
    sweep_values: tuple[Any, ...]
    base: tuple[tuple[str, Any], ...] = ()
    variants: tuple[tuple[str, tuple[tuple[str, Any], ...]], ...] = ()
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    outputs: tuple[str, ...] = ("infected_mean", "sdr", "eff")

    def __post_init__(self):
        if not self.sweep_values:
            raise ValueError(f"preset {self.name}: sweep_values must be non-empty")
        if not self.seeds:
            raise ValueError(f"preset {self.name}: seeds must be non-empty")

    def configs(self, seeds: tuple[int, ...] | None = None):
        """Yield (label, seed, WorldConfig) for every run of the preset."""
        seeds = tuple(seeds) if seeds else self.seeds
        variants = self.variants or (("", ()),)
        for variant_label, variant_overrides in variants:
            for value in self.sweep_values:
                label = f"{self.sweep_param}={value}"
                if variant_label:
                    label = f"{variant_label}.{label}"
                for seed in seeds:
                    values = dict(self.base)
                    values.update(dict(variant_overrides))
                    values[self.sweep_param] = value
                    values["seed"] = seed
                    yield label, seed, config_from_values(values)


_PRESET_TICKS = 300


def _p(name, description, sweep_param, sweep_values, base=(), variants=(),
       outputs=("infected_mean", "sdr", "eff")) -> ExperimentPreset:
    base = (("ticks", _PRESET_TICKS),) + tuple(base)
    return ExperimentPreset(
        name=name, description=description, sweep_param=sweep_param,
        sweep_values=tuple(sweep_values), base=base, variants=tuple(variants),
        outputs=tuple(outputs),
    )


PRESETS: dict[str, ExperimentPreset] = {
    p.name: p
    for p in (
        _p("fig6-infected",
           "Mean infected per cluster, epidemic vs random target selection",
           "strategy", ("epidemic", "random"),
           outputs=("infected_mean",)),
        _p("fig7-sessions",
           "Transfer sessions between clusters vs successfully received packets",
           "workload", (0.25, 0.5, 1.0),
           outputs=("sdr", "completed_files")),
        _p("fig8-delay",
           "End-to-end packet delay as the session load grows",
           "workload", (0.25, 0.5, 1.0),
           outputs=("end_to_end_delay",)),
        _p("fig9-death",
           "Death-rate events against chunk recovery pressure",
           "epidemic.death_rate", (0.0, 0.01, 0.05),
           outputs=("death_rate_events", "bped")),
        _p("fig10-transfer-delay",
           "Total transfer delay under simultaneous transmissions",
           "workload", (0.25, 0.5, 1.0),
           outputs=("mean_transfer_delay",)),
        _p("fig11-sdr",
           "Successful delivery rate vs file capacity in active downloads",
           "chunks_per_file", (2, 4, 8),
           outputs=("sdr",)),
        _p("fig12-13-throughput",
           "Effective and aggregate throughput under growing load",
           "workload", (0.25, 0.5, 1.0),
           outputs=("eff", "total_eff", "mean_transfer_delay")),
        _p("fig14-network-size",
           "Completed files vs network size at high/low streaming factor",
           "node_count", (20, 35, 50),
           variants=(("high-stream", (("workload", 1.0),)),
                     ("low-stream", (("workload", 0.1),))),
           outputs=("completed_files",)),
        _p("fig16-streaming-factor",
           "Community streaming factor vs chunk sharing activity",
           "workload", (0.2, 0.5, 1.0),
           outputs=("w_factor",)),
        _p("fig17-community-sdr",
           "SDR against the number of requests inside a community",
           "workload", (0.25, 0.5, 1.0, 2.0),
           outputs=("sdr",)),
        _p("fig18-w-throughput",
           "Average throughput against the community streaming factor",
           "h_window", (20, 50, 100),
           outputs=("w_factor", "total_eff", "eff")),
    )
}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; known presets: {known}") from None


def adhoc_preset(config: WorldConfig, name: str = "custom",
                 seeds: tuple[int, ...] = (1,)) -> ExperimentPreset:
    """Wrap a single parsed config as a one-value sweep."""
    overrides = []
    from .config import SCHEMA  # local import avoids a cycle at module load
    defaults = WorldConfig()
    for key, (section, field_name, _) in SCHEMA.items():
        holder = getattr(config, section) if section else config
        base_holder = getattr(defaults, section) if section else defaults
        value = getattr(holder, field_name)
        if value != getattr(base_holder, field_name) and key != "seed":
            overrides.append((key, value))
    return ExperimentPreset(
        name=name,
        description="ad-hoc configuration run",
        sweep_param="strategy",
        sweep_values=(config.strategy,),
        base=tuple(overrides),
        seeds=seeds,
        outputs=("infected_mean", "sdr", "eff", "completed_files"),
    )
