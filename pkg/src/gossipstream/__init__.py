"""Deterministic simulator of gossip chunk replication in clustered mobile networks."""

from .config import ConfigError, WorldConfig, parse_config, with_overrides
from .engine import RunSummary, World, run
from .presets import PRESETS, get_preset

__all__ = [
    "ConfigError",
    "WorldConfig",
    "parse_config",
    "with_overrides",
    "RunSummary",
    "World",
    "run",
    "PRESETS",
    "get_preset",
]

__version__ = "0.1.0"
