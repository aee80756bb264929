"""Delay-bounded chunk transfer sessions over relay paths.

A session moves one chunk from a holder to a requester along the
minimum-delay path, packet by packet, with per-hop Bernoulli loss and a
retransmission budget, all inside the stream deadline.  Intercluster
transfers are supervised by both endpoints' cluster heads.  When a relay
node drops out mid-transfer the replica is diffused to a valid neighbor
and the session continues on a rerouted path, or fails once no relay
remains.
"""

from __future__ import annotations

import enum
import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .topology import Graph

INFINITE_DEADLINE = math.inf


class SessionStatus(enum.Enum):
    ACTIVE = "active"
    COMPLETED = "completed"
    EXPIRED = "expired"
    FAILED = "failed"


class FailureReason(enum.Enum):
    NOT_FOUND = "not_found"
    SOCIAL_GATE = "social_gate"
    NO_RELAY = "no_relay"
    LOSS_BUDGET = "loss_budget"


class SessionClosedError(RuntimeError):
    """Raised on any attempt to mutate a closed session."""


@dataclass(frozen=True)
class HopDelayModel:
    """Generative model for realized per-hop delays.

    delay = base + per_byte * bytes + |gaussian(0, jitter_std)|, with an
    independent Bernoulli(loss_prob) drop per hop.
    """

    base: float = 0.5
    per_byte: float = 0.001
    jitter_std: float = 0.1
    loss_prob: float = 0.01

    def __post_init__(self):
        if min(self.base, self.per_byte, self.jitter_std) < 0:
            raise ValueError(f"delay parameters must be >= 0: {self}")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError(f"loss_prob must be in [0,1], got {self.loss_prob}")

    def draw(self, rng: random.Random, packet_bytes: float) -> float:
        return self.base + self.per_byte * packet_bytes + abs(rng.gauss(0.0, self.jitter_std))

    def expected(self, packet_bytes: float) -> float:
        # E|N(0, s)| = s * sqrt(2/pi); used as the routing weight.
        return self.base + self.per_byte * packet_bytes + self.jitter_std * math.sqrt(2 / math.pi)


@dataclass
class TransferSession:
    """One chunk transfer: route, deadline, packet and delay accounting."""

    src: int
    dst: int
    chunk: int
    path: list[int]
    started_at: int
    deadline: float
    per_hop_delays: list[float] = field(default_factory=list)
    packets_sent: int = 0
    packets_lost: int = 0
    status: SessionStatus = SessionStatus.ACTIVE
    reason: Optional[FailureReason] = None
    # Realized per-hop delay spent on paths abandoned after a relay failure.
    carryover_delay: float = 0.0

    def __post_init__(self):
        if not self.per_hop_delays:
            self.per_hop_delays = [0.0] * max(0, len(self.path) - 1)
        self.validate()

    def validate(self):
        if self.path and (self.path[0] != self.src or self.path[-1] != self.dst):
            raise ValueError(f"path {self.path} must run from {self.src} to {self.dst}")
        if len(self.per_hop_delays) != max(0, len(self.path) - 1):
            raise ValueError("per_hop_delays length must be path length - 1")
        if self.packets_lost > self.packets_sent:
            raise ValueError("packets_lost cannot exceed packets_sent")

    @property
    def packets_delivered(self) -> int:
        return self.packets_sent - self.packets_lost

    def close(self, status: SessionStatus, reason: Optional[FailureReason] = None):
        if self.status is not SessionStatus.ACTIVE:
            raise SessionClosedError(f"session already {self.status}")
        if status is SessionStatus.ACTIVE:
            raise ValueError("cannot close to ACTIVE")
        self.status = status
        self.reason = reason
        self.validate()

    def reroute(self, new_path: list[int]):
        """Abandon the current path after a relay failure; keep spent delay."""
        if self.status is not SessionStatus.ACTIVE:
            raise SessionClosedError(f"session already {self.status}")
        self.carryover_delay += sum(self.per_hop_delays)
        self.path = new_path
        self.per_hop_delays = [0.0] * max(0, len(new_path) - 1)
        self.validate()


def min_delay_path(
    graph: Graph,
    weight: Callable[[int, int], float],
    src: int,
    dst: int,
) -> Optional[tuple[list[int], float]]:
    """Minimum total-delay path from src to dst.

    Ties break toward fewer hops, then lexicographically smaller node
    sequences.  Returns None when dst is unreachable.
    """
    if src not in graph or dst not in graph:
        raise KeyError(f"src {src} or dst {dst} not in graph")
    if src == dst:
        return [src], 0.0
    # Heap entries order by (cost, hops, path); tuple comparison of the
    # path gives the lexicographic tie-break.
    heap: list[tuple[float, int, tuple[int, ...]]] = [(0.0, 0, (src,))]
    settled: set[int] = set()
    while heap:
        cost, hops, path = heapq.heappop(heap)
        node = path[-1]
        if node == dst:
            return list(path), cost
        if node in settled:
            continue
        settled.add(node)
        for peer in graph[node]:
            if peer in settled:
                continue
            heapq.heappush(heap, (cost + weight(node, peer), hops + 1, path + (peer,)))
    return None


def check_stream_deadline(session: TransferSession, now: int) -> SessionStatus:
    """Expire an active session once now - started_at exceeds the bound."""
    if session.status is not SessionStatus.ACTIVE:
        return session.status
    if now - session.started_at > session.deadline:
        session.close(SessionStatus.EXPIRED)
    return session.status


def total_transfer_delay(session: TransferSession) -> float:
    """Sum of realized per-hop delays, including abandoned-path legs."""
    return session.carryover_delay + sum(session.per_hop_delays)


def multipart_delay_estimate(tau0: float, m: int, n: int) -> float:
    """Expected multipart download time (tau0 / m) * log2(n)."""
    if m < 1 or n < 1:
        raise ValueError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
    return (tau0 / m) * math.log2(n)


def _route(world, src: int, dst: int) -> Optional[tuple[list[int], float]]:
    """Pick the transfer path; intercluster legs pass through both heads.

    Same-cluster (or unclustered) pairs take the direct minimum-delay
    path.  Different clusters route src -> head(src) -> head(dst) -> dst
    unless a direct link between the endpoints exists; if the supervised
    route is broken, fall back to the direct path.
    """
    graph = world.live_graph()
    weight = world.path_weight
    c_src = world.cluster_of(src)
    c_dst = world.cluster_of(dst)
    if c_src is None or c_dst is None or c_src == c_dst or dst in graph.get(src, ()):
        return min_delay_path(graph, weight, src, dst)
    waypoints = [src, world.cluster_head(c_src), world.cluster_head(c_dst), dst]
    path: list[int] = [src]
    cost = 0.0
    for a, b in zip(waypoints, waypoints[1:]):
        leg = min_delay_path(graph, weight, a, b)
        if leg is None:
            return min_delay_path(graph, weight, src, dst)
        leg_path, leg_cost = leg
        # Drop the junction node repeated between legs.
        path.extend(leg_path[1:])
        cost += leg_cost
    # Supervised routes can revisit a junction; collapse such loops.
    deduped: list[int] = []
    for node in path:
        if node in deduped:
            del deduped[deduped.index(node) + 1:]
        else:
            deduped.append(node)
    if deduped != path:
        cost = sum(weight(a, b) for a, b in zip(deduped, deduped[1:]))
    return deduped, cost


def run_chunk_exchange(
    world,
    src: int,
    dst: int,
    chunk: int,
    now: int,
    rng: random.Random,
) -> TransferSession:
    """Execute one chunk exchange and return the closed session.

    Mirrors the gossip exchange procedure: shared-index lookup, delay-bound
    check, social-interaction gate for intracluster transfers, then the
    packet loop with per-hop loss, retransmission budget, and epidemic
    re-diffusion around failed relay nodes.
    """
    deadline = world.deadline_for(chunk)

    def failed(path: list[int], reason: FailureReason) -> TransferSession:
        session = TransferSession(src=src, dst=dst, chunk=chunk, path=path,
                                  started_at=now, deadline=deadline)
        session.close(SessionStatus.FAILED, reason)
        return session

    holders = world.chunk_holders(chunk)
    if not holders:
        return failed([], FailureReason.NOT_FOUND)
    if src not in holders:
        src = min(holders)

    c_src = world.cluster_of(src)
    c_dst = world.cluster_of(dst)
    if c_src is not None and c_src == c_dst and not world.social_valid(src, dst):
        return failed([], FailureReason.SOCIAL_GATE)

    routed = _route(world, src, dst)
    if routed is None:
        return failed([], FailureReason.NO_RELAY)
    path, d_p = routed
    if d_p * world.packets_per_chunk > deadline:
        session = TransferSession(src=src, dst=dst, chunk=chunk, path=path,
                                  started_at=now, deadline=deadline)
        session.close(SessionStatus.EXPIRED)
        return session

    session = TransferSession(src=src, dst=dst, chunk=chunk, path=path,
                              started_at=now, deadline=deadline)
    model = world.hop_delay
    packet_bytes = world.chunk_bytes / world.packets_per_chunk

    for _packet in range(world.packets_per_chunk):
        retries = 0
        while True:
            # Relay liveness: reroute around nodes that left the radio range.
            dead = [n for n in session.path[1:-1] if not world.node_available(n)]
            if dead:
                rerouted = _route(world, src, dst)
                if rerouted is None:
                    session.close(SessionStatus.FAILED, FailureReason.NO_RELAY)
                    return session
                new_path, _ = rerouted
                if len(new_path) > 1:
                    world.diffuse_replica(new_path[1], chunk, now)
                session.reroute(new_path)

            session.packets_sent += 1
            delivered = True
            for i in range(len(session.path) - 1):
                session.per_hop_delays[i] += model.draw(rng, packet_bytes)
                world.drain_energy(session.path[i], world.energy_per_packet)
                if rng.random() < model.loss_prob:
                    session.packets_lost += 1
                    delivered = False
                    break
            if total_transfer_delay(session) > deadline:
                session.close(SessionStatus.EXPIRED)
                return session
            if delivered:
                break
            retries += 1
            if retries > world.retry_budget:
                session.close(SessionStatus.FAILED, FailureReason.LOSS_BUDGET)
                return session

    session.close(SessionStatus.COMPLETED)
    return session
