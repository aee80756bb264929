"""Node mobility, disk connectivity, clustering and the energy tree.

Positions advance as L(t) = L(t-1) + speed * dir with reflective region
boundaries.  Links are a disk model: two nodes are connected iff their
euclidean distance is at most the radio range.  Post-probation nodes are
partitioned into clusters truncated to a zone radius around an elected
head (maximal storage capacity), and each cluster maintains a 2-hop tree
rooted at its minimum-residual-energy node.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

UNIT_TOL = 1e-9

Graph = dict[int, list[int]]
Point = tuple[float, float]


class Role(enum.Enum):
    FREE = "free"
    PROBATIONER = "probationer"
    MEMBER = "member"
    CLUSTER_HEAD = "cluster_head"
    RELAY_EXCLUDED = "relay_excluded"


class NormalizationError(ValueError):
    """Raised when a direction vector is not unit length."""


@dataclass
class NodeState:
    """Mutable per-node state: kinematics, resources, cluster role."""

    id: int
    loc: Point
    speed: float
    direction: Point
    energy: float
    capacity: int
    joined_cluster_at: Optional[int] = None
    role: Role = Role.FREE
    next_turn_at: int = 0

    def __post_init__(self):
        _check_unit(self.direction)
        if self.speed < 0:
            raise ValueError(f"speed must be >= 0, got {self.speed}")
        if self.energy < 0:
            raise ValueError(f"energy must be >= 0, got {self.energy}")

    @property
    def post_probation(self) -> bool:
        return self.role in (Role.MEMBER, Role.CLUSTER_HEAD)


@dataclass
class ClusterView:
    """One formed cluster: elected head plus zone-limited members."""

    id: int
    head: int
    members: frozenset[int]
    edges: int
    formed_at: int
    exchange_count: int = 0

    def __post_init__(self):
        if self.head not in self.members:
            raise ValueError(f"head {self.head} not among members")
        if self.exchange_count < 0 or self.edges < 0:
            raise ValueError("edge and exchange counts must be >= 0")


@dataclass(frozen=True)
class GetTree:
    """Gradual Energy Tree: 2-hop tree rooted at the energy minimum."""

    root: int
    children: tuple[tuple[int, int], ...]  # (parent, child) links

    @property
    def depth(self) -> int:
        if not self.children:
            return 0
        parents = {child: parent for parent, child in self.children}
        longest = 1
        for child in parents:
            hops, cursor = 0, child
            while cursor in parents:
                cursor = parents[cursor]
                hops += 1
            longest = max(longest, hops)
        return longest

    def nodes(self) -> set[int]:
        out = {self.root}
        for parent, child in self.children:
            out.add(parent)
            out.add(child)
        return out


def _check_unit(direction: Point):
    norm = math.hypot(*direction)
    if abs(norm - 1.0) > UNIT_TOL:
        raise NormalizationError(f"direction {direction} has norm {norm}, expected 1")


def update_location(
    loc: Point,
    speed: float,
    direction: Point,
    region: Point,
) -> tuple[Point, Point]:
    """Advance one tick and reflect at the region boundary.

    Returns the new position and the (possibly flipped) direction.  A
    reflection mirrors the overshoot back into the region and flips the
    corresponding direction component, so containment is preserved for any
    step length.
    """
    _check_unit(direction)
    pos = list(loc)
    vec = list(direction)
    for axis in range(2):
        value = pos[axis] + speed * vec[axis]
        limit = region[axis]
        while value < 0.0 or value > limit:
            if value < 0.0:
                value = -value
            else:
                value = 2.0 * limit - value
            vec[axis] = -vec[axis]
        pos[axis] = value
    return (pos[0], pos[1]), (vec[0], vec[1])


def connectivity_graph(nodes: Sequence[NodeState], radio_range: float) -> Graph:
    """Disk-model adjacency: edge iff distance <= radio_range (inclusive).

    Symmetric, irreflexive; neighbor lists are sorted by node id.
    """
    if radio_range <= 0:
        raise ValueError(f"radio_range must be > 0, got {radio_range}")
    ids = [n.id for n in nodes]
    graph: Graph = {i: [] for i in ids}
    if len(nodes) < 2:
        return graph
    pos = np.array([n.loc for n in nodes])
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    close = dist <= radio_range
    order = np.argsort(ids)
    for a in range(len(nodes)):
        row = graph[ids[a]]
        for b in order:
            if b != a and close[a, b]:
                row.append(ids[b])
    return graph


def bfs_hops(graph: Graph, src: int, max_hops: Optional[int] = None,
             allowed: Optional[frozenset[int]] = None) -> dict[int, int]:
    """Hop distances from src, optionally capped and restricted to a node set."""
    hops = {src: 0}
    queue = deque([src])
    while queue:
        node = queue.popleft()
        depth = hops[node]
        if max_hops is not None and depth >= max_hops:
            continue
        for peer in graph.get(node, ()):
            if peer in hops:
                continue
            if allowed is not None and peer not in allowed:
                continue
            hops[peer] = depth + 1
            queue.append(peer)
    return hops


def probation_update(
    node: NodeState,
    now: int,
    t_s: int,
    neighbor_count: int,
    min_density: int = 2,
) -> Role:
    """Resolve a node's role for this tick.

    Nodes in regions too sparse to serve (fewer than `min_density` mutually
    reachable nodes, themselves included) are excluded from relay and head
    duty.  A probationer graduates to member once t_s ticks have elapsed
    since it joined.
    """
    if neighbor_count + 1 < min_density:
        return Role.RELAY_EXCLUDED
    if node.role is Role.PROBATIONER:
        if node.joined_cluster_at is None:
            raise ValueError(f"probationer {node.id} has no joined_cluster_at")
        if now - node.joined_cluster_at >= t_s:
            return Role.MEMBER
        return Role.PROBATIONER
    if node.role is Role.RELAY_EXCLUDED:
        # Back in a dense region: restart probation.
        return Role.PROBATIONER
    return node.role


def form_clusters(
    graph: Graph,
    nodes: Mapping[int, NodeState],
    now: int,
    zone_radius_hops: int = 2,
) -> list[ClusterView]:
    """Partition post-probation nodes into zone-limited clusters.

    Within each connected component the member with maximal capacity
    (ties: lowest id) is elected head; its cluster is the component
    truncated to `zone_radius_hops` around the head.  Leftover component
    nodes repeat the election, so the component is fully partitioned.
    A freshly admitted member with capacity above the sitting head's wins
    the next election automatically.
    """
    if zone_radius_hops < 1:
        raise ValueError(f"zone_radius_hops must be >= 1, got {zone_radius_hops}")
    eligible = {i for i, n in nodes.items() if n.post_probation}
    clusters: list[ClusterView] = []
    unassigned = set(eligible)
    seen: set[int] = set()
    for start in sorted(eligible):
        if start in seen:
            continue
        component = frozenset(bfs_hops(graph, start, allowed=frozenset(eligible)))
        seen |= component
        remaining = set(component)
        while remaining:
            head = max(remaining, key=lambda n: (nodes[n].capacity, -n))
            reach = bfs_hops(graph, head, max_hops=zone_radius_hops,
                             allowed=frozenset(remaining))
            members = frozenset(reach)
            edges = sum(
                1
                for a in members
                for b in graph.get(a, ())
                if b in members and a < b
            )
            clusters.append(
                ClusterView(id=head, head=head, members=members,
                            edges=edges, formed_at=now)
            )
            remaining -= members
    return clusters


def build_get_tree(
    cluster: ClusterView,
    energies: Mapping[int, float],
    graph: Graph,
) -> GetTree:
    """Build the 2-hop energy tree for one cluster.

    Root is the member with minimal residual energy (ties: lowest id).
    Members within 2 hops of the root and with strictly higher energy are
    attached in descending energy order: hop-1 nodes under the root, hop-2
    nodes under their best in-tree hop-1 neighbor.  Farther or equal-energy
    members are excluded.
    """
    if not cluster.members:
        raise ValueError("cluster has no members")
    root = min(cluster.members, key=lambda n: (energies[n], n))
    hops = bfs_hops(graph, root, max_hops=2, allowed=cluster.members)
    candidates = sorted(
        (n for n in cluster.members
         if n != root and hops.get(n, 3) <= 2 and energies[n] > energies[root]),
        key=lambda n: (-energies[n], n),
    )
    links: list[tuple[int, int]] = []
    attached = {root}
    # First pass: direct neighbors of the root.
    for node in candidates:
        if hops[node] == 1:
            links.append((root, node))
            attached.add(node)
    # Second pass: 2-hop nodes under their strongest attached relay.
    for node in candidates:
        if hops[node] != 1:
            relays = [
                peer for peer in graph.get(node, ())
                if peer in attached and peer != root and hops.get(peer) == 1
            ]
            if not relays:
                continue
            parent = max(relays, key=lambda n: (energies[n], -n))
            links.append((parent, node))
            attached.add(node)
    ordered = tuple(sorted(links, key=lambda pc: (-energies[pc[1]], pc[1])))
    return GetTree(root=root, children=ordered)


@dataclass(frozen=True)
class ReachabilityModel:
    """Per-hop success probability exp(-(d/decay)^exponent), multiplied
    along a path.  Exponents above 1 make short relayed hops beat one long
    direct hop, giving a nonempty relay region.
    """

    decay: float = 400.0
    exponent: float = 1.0

    def __post_init__(self):
        if self.decay <= 0:
            raise ValueError(f"decay must be > 0, got {self.decay}")
        if self.exponent <= 0:
            raise ValueError(f"exponent must be > 0, got {self.exponent}")

    def hop_success(self, distance: float) -> float:
        return math.exp(-((distance / self.decay) ** self.exponent))

    def path_probability(self, points: Sequence[Point]) -> float:
        prob = 1.0
        for a, b in zip(points, points[1:]):
            prob *= self.hop_success(math.dist(a, b))
        return prob


def relay_region(
    u: Point,
    w: Point,
    model: ReachabilityModel,
) -> Callable[[Point], bool]:
    """Predicate: is relaying u -> w -> p more reliable than u -> p direct?"""
    if u == w:
        raise ValueError("transmitter and relay must be distinct")

    def inside(p: Point) -> bool:
        return model.path_probability([u, w, p]) > model.path_probability([u, p])

    return inside
