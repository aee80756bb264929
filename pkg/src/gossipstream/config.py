"""Run configuration: a flat dotted key-value format and its schema.

Scenario files are plain text, one ``key = value`` per line, with dotted
prefixes for the rate sections (``epidemic.beta``, ``hop_delay.loss_prob``,
``reach.decay``).  Missing keys take documented defaults; unknown keys are
rejected with the offending line so typos cannot silently change a run.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields, replace
from typing import Any

from .epidemic import EpidemicParams
from .topology import ReachabilityModel
from .transfer import HopDelayModel

STRATEGIES = ("epidemic", "random")
ORIGIN_STATES = ("recovered", "infected")


class ConfigError(ValueError):
    """Invalid configuration; message lists every violation found."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class WorldConfig:
    """Everything a simulation run depends on, seed included."""

    node_count: int = 50
    region_width: float = 1000.0
    region_height: float = 1000.0
    radio_range: float = 300.0
    t_s: int = 5  # probation slot, ticks
    zone_radius_hops: int = 2
    min_cluster_density: int = 2
    file_count: int = 5
    chunks_per_file: int = 4
    workload: float = 0.5  # request arrivals per tick
    strategy: str = "epidemic"
    seed: int = 42
    ticks: int = 500
    retention_fraction: float = 0.1
    w_max: float = 10.0
    h_window: int = 50  # sliding window for exchange counts, ticks
    node_speed: float = 2.0  # meters per tick, all nodes
    dir_dwell_mean: float = 20.0  # mean ticks between direction redraws
    energy_min: float = 50.0
    energy_max: float = 100.0
    capacity_min: int = 8  # chunk slots
    capacity_max: int = 16
    packets_per_chunk: int = 8
    chunk_bytes: float = 1024.0
    retry_budget: int = 3
    bandwidth: float = 512.0  # bytes per tick, for E_ff
    energy_per_packet: float = 0.01
    origin_state: str = "recovered"
    origin_count: int = 1  # initial holders per chunk
    feedback_k: int = 3  # receivers per chunk-index advertisement
    epidemic: EpidemicParams = field(default_factory=EpidemicParams)
    hop_delay: HopDelayModel = field(default_factory=HopDelayModel)
    reach: ReachabilityModel = field(default_factory=ReachabilityModel)

    @property
    def chunk_count(self) -> int:
        return self.file_count * self.chunks_per_file

    @property
    def region(self) -> tuple[float, float]:
        return (self.region_width, self.region_height)

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self) -> list[str]:
        """Every violated top-level invariant (nested sections self-check)."""
        out = []

        def positive(name):
            if getattr(self, name) <= 0:
                out.append(f"{name} must be > 0, got {getattr(self, name)}")

        def non_negative(name):
            if getattr(self, name) < 0:
                out.append(f"{name} must be >= 0, got {getattr(self, name)}")

        if self.node_count < 1:
            out.append(f"node_count must be >= 1, got {self.node_count}")
        if self.ticks < 0:
            out.append(f"ticks must be >= 0, got {self.ticks}")
        for name in ("region_width", "region_height", "radio_range", "t_s",
                     "file_count", "chunks_per_file", "zone_radius_hops",
                     "min_cluster_density", "packets_per_chunk", "chunk_bytes",
                     "bandwidth", "dir_dwell_mean", "capacity_min"):
            positive(name)
        for name in ("workload", "node_speed", "energy_min", "w_max",
                     "energy_per_packet", "retry_budget", "feedback_k"):
            non_negative(name)
        if not 0.0 <= self.retention_fraction <= 1.0:
            out.append(f"retention_fraction must be in [0,1], got {self.retention_fraction}")
        if self.h_window < 1:
            out.append(f"h_window must be >= 1, got {self.h_window}")
        if self.energy_max < self.energy_min:
            out.append("energy_max must be >= energy_min")
        if self.capacity_max < self.capacity_min:
            out.append("capacity_max must be >= capacity_min")
        if self.strategy not in STRATEGIES:
            out.append(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if not 1 <= self.origin_count <= self.node_count:
            out.append(
                f"origin_count must be in [1, node_count], got {self.origin_count}"
            )
        if self.origin_state not in ORIGIN_STATES:
            out.append(f"origin_state must be one of {ORIGIN_STATES}, got {self.origin_state!r}")
        return out


_SECTIONS = {
    "epidemic": EpidemicParams,
    "hop_delay": HopDelayModel,
    "reach": ReachabilityModel,
}


def _schema() -> dict[str, tuple[str, str, type]]:
    """Dotted key -> (section, field name, value type)."""
    table: dict[str, tuple[str, str, type]] = {}
    for f in fields(WorldConfig):
        if f.name in _SECTIONS:
            continue
        table[f.name] = ("", f.name, _type_of(f))
    for section, cls in _SECTIONS.items():
        for f in fields(cls):
            table[f"{section}.{f.name}"] = (section, f.name, _type_of(f))
    return table


def _type_of(f: dataclasses.Field) -> type:
    text = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    return {"int": int, "float": float, "str": str}[str(text)]


SCHEMA = _schema()


def _convert(raw: str, kind: type, key: str, lineno: int) -> Any:
    raw = raw.strip()
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(
            [f"line {lineno}: key {key!r} expects {kind.__name__}, got {raw!r}"]
        ) from None


def parse_config(text: str) -> WorldConfig:
    """Parse a scenario document into a validated WorldConfig.

    Raises ConfigError naming the offending key and line for unknown keys,
    type mismatches and violated invariants; when several invariants fail
    the error lists all of them.
    """
    values: dict[str, Any] = {}
    problems: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            problems.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in SCHEMA:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        section, name, kind = SCHEMA[key]
        try:
            values[key] = _convert(raw, kind, key, lineno)
        except ConfigError as err:
            problems.extend(err.problems)
    if problems:
        raise ConfigError(problems)
    return config_from_values(values)


def config_from_values(values: dict[str, Any]) -> WorldConfig:
    """Build a WorldConfig from dotted-key overrides of the defaults."""
    top: dict[str, Any] = {}
    per_section: dict[str, dict[str, Any]] = {name: {} for name in _SECTIONS}
    problems: list[str] = []
    for key, value in values.items():
        if key not in SCHEMA:
            problems.append(f"unknown key {key!r}")
            continue
        section, name, kind = SCHEMA[key]
        if section:
            per_section[section][name] = value
        else:
            top[name] = value
    nested: dict[str, Any] = {}
    for section, cls in _SECTIONS.items():
        try:
            nested[section] = cls(**per_section[section])
        except ValueError as err:
            problems.append(f"{section}: {err}")
    if problems:
        raise ConfigError(problems)
    try:
        return WorldConfig(**top, **nested)
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError([str(err)]) from None


def emit_config(config: WorldConfig) -> str:
    """Render a config as scenario text; parse(emit(c)) == c."""
    lines = []
    for key in SCHEMA:
        section, name, _ = SCHEMA[key]
        holder = getattr(config, section) if section else config
        lines.append(f"{key} = {getattr(holder, name)}")
    return "\n".join(lines) + "\n"


def with_overrides(config: WorldConfig, **dotted: Any) -> WorldConfig:
    """Return a copy with dotted-key (dots spelled as '__') overrides applied."""
    updates: dict[str, dict[str, Any]] = {}
    top: dict[str, Any] = {}
    for key, value in dotted.items():
        key = key.replace("__", ".")
        if key not in SCHEMA:
            raise ConfigError([f"unknown key {key!r}"])
        section, name, _ = SCHEMA[key]
        if section:
            updates.setdefault(section, {})[name] = value
        else:
            top[name] = value
    for section, values in updates.items():
        top[section] = replace(getattr(config, section), **values)
    return replace(config, **top)
