"""Observable metrics and the analytic epidemic oracle.

The logistic solution here is the closed-form answer to
dI/dt = beta*I*(N - I); the simulator's stochastic chunk spreading is
validated against it.  The remaining functions are the throughput, SDR
and per-tick bookkeeping behind the experiment report series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Iterable, Sequence


@dataclass(frozen=True)
class LogisticParams:
    """Parameters of the complete-mixing spreading model."""

    beta: float
    n: int
    i0: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"population must be >= 1, got {self.n}")
        if not 1 <= self.i0 <= self.n:
            raise ValueError(f"need 1 <= i0 <= n, got i0={self.i0}, n={self.n}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")


def logistic_infected(p: LogisticParams, t: float) -> float:
    """Expected infected count I(t) = N / (1 + ((N-I0)/I0) * exp(-beta*N*t)).

    Monotone non-decreasing in t, I(0) = I0, and I(t) -> N as t -> inf.
    """
    if p.n == p.i0:
        return float(p.n)
    exponent = min(-p.beta * p.n * t, 700.0)  # exp overflow guard for t < 0
    return p.n / (1.0 + ((p.n - p.i0) / p.i0) * math.exp(exponent))


def spreading_ratio(p: LogisticParams, t: float) -> float:
    """Infected fraction I(t)/N: the spreading CDF, in [I0/N, 1]."""
    return logistic_infected(p, t) / p.n


def effective_throughput(loss: float, size: float, time: float, bandwidth: float) -> float:
    """E_ff = 1 - loss * (size/time) * (1/bandwidth), clamped to [0, 1]."""
    if not 0.0 <= loss <= 1.0:
        raise ValueError(f"loss must be in [0,1], got {loss}")
    if time <= 0 or bandwidth <= 0:
        raise ValueError(f"time and bandwidth must be > 0, got {time}, {bandwidth}")
    raw = 1.0 - loss * (size / time) / bandwidth
    return min(1.0, max(0.0, raw))


def total_effective_throughput(
    pairs: Iterable[tuple[int, float, float, float]],
) -> float:
    """Aggregate throughput: sum over pairs of n_i * (bits * size / time).

    Each pair is (hop_count, chunk_bits, transferred_size, transferred_time).
    """
    total = 0.0
    for hops, bits, size, time in pairs:
        if time <= 0:
            raise ValueError(f"transferred_time must be > 0, got {time}")
        total += hops * (bits * size / time)
    return total


def sdr(completed: int, initiated: int) -> float:
    """Successful delivery rate; vacuously 1 when nothing was initiated."""
    if completed > initiated:
        raise ValueError(f"completed {completed} exceeds initiated {initiated}")
    if initiated == 0:
        return 1.0
    return completed / initiated


@dataclass(frozen=True)
class MetricsRow:
    """One tick's observables, in emitted column order."""

    tick: int
    infected_mean: float
    sdr: float
    eff: float
    total_eff: float
    mean_transfer_delay: float
    end_to_end_delay: float
    w_factor: float
    completed_files: int
    death_rate_events: int
    bped: float

    def __post_init__(self):
        if not 0.0 <= self.sdr <= 1.0:
            raise ValueError(f"sdr must be in [0,1], got {self.sdr}")
        if not 0.0 <= self.eff <= 1.0:
            raise ValueError(f"eff must be in [0,1], got {self.eff}")
        if self.completed_files < 0 or self.death_rate_events < 0:
            raise ValueError("counts must be >= 0")


METRIC_COLUMNS: tuple[str, ...] = tuple(f.name for f in fields(MetricsRow))


def record_tick(world) -> MetricsRow:
    """Snapshot one MetricsRow from a consistent world state (pure read)."""
    clusters = world.clusters
    if clusters:
        infected_mean = sum(
            world.infected_held_by(c.members) for c in clusters
        ) / len(clusters)
    else:
        infected_mean = 0.0
    return MetricsRow(
        tick=world.tick_count,
        infected_mean=infected_mean,
        sdr=sdr(world.sessions_completed, world.sessions_initiated),
        eff=world.current_eff(),
        total_eff=world.total_eff_this_tick,
        mean_transfer_delay=world.mean_transfer_delay(),
        end_to_end_delay=world.mean_end_to_end_delay(),
        w_factor=world.w_factor,
        completed_files=world.completed_files(),
        death_rate_events=world.death_events_this_tick,
        bped=world.bped_accumulator,
    )
