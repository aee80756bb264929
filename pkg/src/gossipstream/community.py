"""Social-interaction metrics gating the gossip exchange.

The community streaming factor W compares download activity against
inactive hosted content; cluster cohesion C_N is a normalized exchange
density that only exists when the relay reliability of the cluster's
gating pair beats W; K_valid is the social gate used when selecting
gossip peers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .topology import ClusterView, Graph, bfs_hops


@dataclass(frozen=True)
class CommunityStats:
    """Download-activity snapshot used to compute W."""

    dld_rate: float  # completed downloads per tick
    sharing_chunks: int  # chunks with an active transfer now
    total_dlds: int  # cumulative completed downloads
    inactive_chunks: int  # hosted chunks with no active transfer

    def __post_init__(self):
        if (
            self.dld_rate < 0
            or self.sharing_chunks < 0
            or self.total_dlds < 0
            or self.inactive_chunks < 0
        ):
            raise ValueError(f"community stats must be >= 0: {self}")


@dataclass(frozen=True)
class CohesionInput:
    """Inputs to the gated cluster-cohesion metric."""

    exchange_count: int  # h_N(t): intracluster exchanges in the window
    interconnected: int  # I_C(N)(t): interconnected node count
    relay_prob: float  # reliability of the cluster's gating relay pair

    def __post_init__(self):
        if self.exchange_count < 0 or self.interconnected < 0:
            raise ValueError(f"counts must be >= 0: {self}")
        if not 0.0 <= self.relay_prob <= 1.0:
            raise ValueError(f"relay_prob must be in [0,1], got {self.relay_prob}")


def streaming_factor(stats: CommunityStats, w_max: float = 10.0) -> float:
    """Community streaming factor W.

    W = (dld_rate * sharing_chunks) / (total_dlds * inactive_chunks).
    With no download history at all there is no community evidence yet and
    the gate is left open (W = 0); once downloads exist but no hosted chunk
    is inactive the ratio degenerates upward and is capped at w_max.
    """
    if stats.total_dlds == 0:
        return 0.0
    if stats.inactive_chunks == 0:
        return w_max
    return (stats.dld_rate * stats.sharing_chunks) / (
        stats.total_dlds * stats.inactive_chunks
    )


def cluster_cohesion(inp: CohesionInput, w: float) -> Optional[float]:
    """Gated cohesion: 2*h_N / (I_C * (I_C - 1)), iff relay_prob > W.

    Returns None (no community) when the gate fails or fewer than two
    nodes are interconnected.
    """
    if inp.relay_prob <= w:
        return None
    if inp.interconnected < 2:
        return None
    return 2.0 * inp.exchange_count / (inp.interconnected * (inp.interconnected - 1))


def neighbor_feedback(
    cluster: ClusterView,
    chunk: int,
    k: int,
    holder: int,
    graph: Graph,
) -> list[int]:
    """Chunk-index advertisements from a holder to its k nearest neighbors.

    The holder advertises only when the cluster's exchange count exceeds
    the fully-interconnected threshold N(N-1)/2 (strict).  Recipients are
    cluster members ordered by hop distance from the holder, ties by id,
    at most min(k, N-1) of them.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    n = len(cluster.members)
    if cluster.exchange_count <= n * (n - 1) // 2:
        return []
    if k == 0:
        return []
    hops = bfs_hops(graph, holder, allowed=cluster.members)
    receivers = sorted(
        (m for m in cluster.members if m != holder and m in hops),
        key=lambda m: (hops[m], m),
    )
    return receivers[: min(k, n - 1)]


def k_valid(
    a: int,
    b: int,
    clusters: Iterable[ClusterView],
    w: float,
    relay_probs: Mapping[int, float],
) -> bool:
    """Social-interaction validity: a and b share a cohesion-passing cluster."""
    for cluster in clusters:
        if a in cluster.members and b in cluster.members:
            inp = CohesionInput(
                exchange_count=cluster.exchange_count,
                interconnected=len(cluster.members),
                relay_prob=relay_probs.get(cluster.id, 0.0),
            )
            if cluster_cohesion(inp, w) is not None:
                return True
    return False
