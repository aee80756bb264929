"""SIRD per-chunk replica state machine.

A replica of a chunk on a node walks the strict chain
Susceptible -> Infected -> Recovered -> Dead.  Infected means a transfer is
pending, Recovered means the node holds a completed copy, Dead means the
copy was purged (stale content or a death certificate).  Transition rates
are contact-style: the infection pressure is beta*S*I, downloads complete
at rate gamma*I, and purges are scheduled through the death TTL and the
dual-threshold death certificates.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence


class ReplicaState(enum.Enum):
    SUSCEPTIBLE = "S"
    INFECTED = "I"
    RECOVERED = "R"
    DEAD = "D"


# Legal transitions: the strict chain S -> I -> R -> D.
_CHAIN_NEXT = {
    ReplicaState.SUSCEPTIBLE: ReplicaState.INFECTED,
    ReplicaState.INFECTED: ReplicaState.RECOVERED,
    ReplicaState.RECOVERED: ReplicaState.DEAD,
}


class InvalidPopulationError(ValueError):
    """Raised when a rate is requested for an empty host population."""


class CensusError(RuntimeError):
    """Raised when a census disagrees with the replica set it summarizes."""


class ChainViolationError(RuntimeError):
    """Raised on any transition that is not the next link of S->I->R->D."""


@dataclass(frozen=True)
class EpidemicParams:
    """All replication rate knobs in one place.

    beta    contact rate per (host * tick)
    gamma   download completion rate per tick
    death_rate  purge scheduling rate per tick; 0 disables staleness purges
    tau     delay-sensitive transfer time limit, ticks
    t1      majority-deletion age for death certificates, ticks
    t2      retention-site deletion age, ticks
    fanout  max gossip targets per holder per tick
    """

    beta: float = 0.004
    gamma: float = 0.2
    death_rate: float = 0.0
    tau: float = 80.0
    t1: int = 20
    t2: int = 60
    fanout: int = 2

    def __post_init__(self):
        problems = []
        if self.beta < 0:
            problems.append(f"beta must be >= 0, got {self.beta}")
        if self.gamma < 0:
            problems.append(f"gamma must be >= 0, got {self.gamma}")
        if self.death_rate < 0:
            problems.append(f"death_rate must be >= 0, got {self.death_rate}")
        if self.tau <= 0:
            problems.append(f"tau must be > 0, got {self.tau}")
        if not (0 < self.t1 <= self.t2):
            problems.append(f"need 0 < t1 <= t2, got t1={self.t1}, t2={self.t2}")
        if self.fanout < 1:
            problems.append(f"fanout must be >= 1, got {self.fanout}")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass
class ChunkReplicaState:
    """Lifecycle state of one (node, chunk) replica."""

    state: ReplicaState = ReplicaState.SUSCEPTIBLE
    since: int = 0
    infected_deadline: Optional[float] = None

    def __post_init__(self):
        self._check_deadline()

    def _check_deadline(self):
        if (self.state is ReplicaState.INFECTED) != (self.infected_deadline is not None):
            raise ValueError(
                "infected_deadline must be present iff state is INFECTED "
                f"(state={self.state}, deadline={self.infected_deadline})"
            )

    def advance(self, to: ReplicaState, now: int, deadline: Optional[float] = None):
        """Move to the next chain state; anything else is a chain violation."""
        if _CHAIN_NEXT.get(self.state) is not to:
            raise ChainViolationError(f"illegal transition {self.state} -> {to}")
        self.state = to
        self.since = now
        self.infected_deadline = deadline
        self._check_deadline()


@dataclass(frozen=True)
class ChunkCensus:
    """Per-chunk S/I/R/D counts over a tracked host population."""

    s: int
    i: int
    r: int
    d: int

    @property
    def n(self) -> int:
        return self.s + self.i + self.r + self.d

    def __post_init__(self):
        if min(self.s, self.i, self.r, self.d) < 0:
            raise ValueError(f"census counts must be >= 0: {self}")


@dataclass(frozen=True)
class DeathCertificate:
    """Immutable tombstone for a deleted chunk."""

    chunk: int
    issued_at: int
    t1: int
    t2: int

    def __post_init__(self):
        if self.t1 > self.t2:
            raise ValueError(f"need t1 <= t2, got t1={self.t1}, t2={self.t2}")


@dataclass(frozen=True)
class Transition:
    """One applied state change, in (node, chunk) order within a tick."""

    node: int
    chunk: int
    src: ReplicaState
    dst: ReplicaState
    forced: bool = False


@dataclass(frozen=True)
class PurgeAction:
    """Outcome of presenting a death certificate to a node's buffer."""

    purge: bool
    respread: bool


def infection_rate(p: EpidemicParams, s: int, i: int, k: int) -> float:
    """Transition pressure from S to I: I*[beta*(k-1)]*[S/(k-1)] = beta*S*I.

    Vanishes when either compartment is empty.
    """
    if k == 0:
        raise InvalidPopulationError("population k must be >= 1")
    if s < 0 or i < 0 or s + i > k:
        raise InvalidPopulationError(f"inconsistent counts s={s}, i={i}, k={k}")
    return p.beta * s * i


def recovery_rate(p: EpidemicParams, i: int) -> float:
    """Download completion rate delta = gamma * I."""
    if i < 0:
        raise ValueError(f"i must be >= 0, got {i}")
    return p.gamma * i


def infection_ttl(p: EpidemicParams, s: int, i: int) -> float:
    """Ticks a transfer may stay Infected before it is forced to Recovered.

    tau * beta * S * I = tau * pi.  An expired transfer counts as an
    incomplete download.
    """
    if s < 0 or i < 0:
        raise ValueError(f"counts must be >= 0, got s={s}, i={i}")
    return p.tau * p.beta * s * i


def death_ttl(t: float, death_rate: float, i: int, r: int) -> float:
    """Age at which a hosted-but-stale replica is scheduled for Dead.

    d_TTL = t*lambda*(I + R).  A zero death rate schedules no purge.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if i < 0 or r < 0:
        raise ValueError(f"counts must be >= 0, got i={i}, r={r}")
    return t * death_rate * (i + r)


def saturating_hazard(x: float) -> float:
    """Default BPED weight f(x) = 1 - exp(-x); dimensionless, f(0) = 0."""
    return 1.0 - math.exp(-x)


def bped(
    death_rate: float,
    r_series: Sequence[float],
    horizon: int,
    f: Callable[[float], float] = saturating_hazard,
) -> float:
    """Buffer Purging Enforcement Degree: sum_{t=0}^{horizon} f(lambda*t)*R(t)."""
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    if len(r_series) < horizon + 1:
        raise ValueError(
            f"r_series has {len(r_series)} entries, need at least {horizon + 1}"
        )
    return sum(f(death_rate * t) * r_series[t] for t in range(horizon + 1))


def census_of(replicas: Mapping[tuple[int, int], ChunkReplicaState]) -> ChunkCensus:
    """Count states over a replica map keyed by (node, chunk)."""
    counts = {state: 0 for state in ReplicaState}
    for replica in replicas.values():
        counts[replica.state] += 1
    return ChunkCensus(
        s=counts[ReplicaState.SUSCEPTIBLE],
        i=counts[ReplicaState.INFECTED],
        r=counts[ReplicaState.RECOVERED],
        d=counts[ReplicaState.DEAD],
    )


def step_chunk_states(
    census: ChunkCensus,
    replicas: Mapping[tuple[int, int], ChunkReplicaState],
    p: EpidemicParams,
    now: int,
    rng: random.Random,
    protected: Iterable[tuple[int, int]] = (),
) -> list[Transition]:
    """Apply one tick of stochastic chain transitions to a mixing group.

    All probabilities are computed from the start-of-tick census and applied
    synchronously.  Per susceptible, infection fires with probability
    min(1, rate/max(1, S)); per infected, recovery fires with min(1, gamma);
    an infected replica past its deadline is forced to Recovered; a
    recovered replica older than the death TTL moves to Dead (only when the
    death rate is positive).  `protected` keys (authoritative origin copies)
    are exempt from the staleness purge.

    Draws are consumed in sorted (node, chunk) key order, so the result is a
    pure function of (state, params, rng stream position).
    """
    observed = census_of(replicas)
    if observed != census:
        raise CensusError(f"census {census} disagrees with replicas {observed}")

    rate = infection_rate(p, census.s, census.i, max(census.n, 1))
    p_infect = min(1.0, rate / max(1, census.s))
    p_recover = min(1.0, p.gamma)
    ttl = infection_ttl(p, census.s, census.i)
    purge_age = death_ttl(float(p.t1), p.death_rate, census.i, census.r)
    protected = frozenset(protected)

    transitions: list[Transition] = []
    for key in sorted(replicas):
        node, chunk = key
        replica = replicas[key]
        if replica.state is ReplicaState.SUSCEPTIBLE:
            if p_infect > 0 and rng.random() < p_infect:
                deadline = now + ttl
                replica.advance(ReplicaState.INFECTED, now, deadline)
                transitions.append(
                    Transition(node, chunk, ReplicaState.SUSCEPTIBLE, ReplicaState.INFECTED)
                )
        elif replica.state is ReplicaState.INFECTED:
            if now > replica.infected_deadline:
                replica.advance(ReplicaState.RECOVERED, now)
                transitions.append(
                    Transition(node, chunk, ReplicaState.INFECTED, ReplicaState.RECOVERED,
                               forced=True)
                )
            elif p_recover > 0 and rng.random() < p_recover:
                replica.advance(ReplicaState.RECOVERED, now)
                transitions.append(
                    Transition(node, chunk, ReplicaState.INFECTED, ReplicaState.RECOVERED)
                )
        elif replica.state is ReplicaState.RECOVERED:
            if (
                p.death_rate > 0
                and key not in protected
                and now - replica.since > purge_age
            ):
                replica.advance(ReplicaState.DEAD, now)
                transitions.append(
                    Transition(node, chunk, ReplicaState.RECOVERED, ReplicaState.DEAD)
                )
    return transitions


def issue_death_certificate(
    registry: dict[int, DeathCertificate],
    chunk: int,
    now: int,
    p: EpidemicParams,
) -> DeathCertificate:
    """Issue (or return the already-issued) certificate for a deleted chunk."""
    existing = registry.get(chunk)
    if existing is not None:
        return existing
    cert = DeathCertificate(chunk=chunk, issued_at=now, t1=p.t1, t2=p.t2)
    registry[chunk] = cert
    return cert


def apply_death_certificate(
    cert: DeathCertificate,
    now: int,
    is_retention_site: bool,
    obsolete_update: bool = False,
) -> PurgeAction:
    """Decide what a node holding `cert` does at tick `now`.

    Most sites purge at age t1; retention sites hold until t2.  An obsolete
    update arriving at a certified node triggers a re-spread of the
    certificate to cluster neighbors and the cluster head.
    """
    age = now - cert.issued_at
    threshold = cert.t2 if is_retention_site else cert.t1
    return PurgeAction(purge=age >= threshold, respread=obsolete_update)


def select_gossip_targets(
    node: int,
    neighbors: Sequence[int],
    fanout: int,
    rng: random.Random,
    valid: Callable[[int], bool] = lambda _: True,
) -> list[int]:
    """Pick up to `fanout` distinct gossip targets among valid neighbors.

    Sampling is uniform without replacement over the neighbors passing the
    social-interaction filter, and deterministic given the rng state.
    """
    if fanout < 1:
        raise ValueError(f"fanout must be >= 1, got {fanout}")
    pool = [peer for peer in neighbors if peer != node and valid(peer)]
    if len(pool) <= fanout:
        return pool
    return rng.sample(pool, fanout)
