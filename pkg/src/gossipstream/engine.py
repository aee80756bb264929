"""Discrete-time simulation loop.

Each tick applies a fixed phase order: mobility, connectivity, clustering,
community stats, workload arrivals, epidemic stepping plus gossip
diffusion, death certificates, metrics.  Every random draw comes from a
sub-stream keyed by (phase, entity, tick), so a run is a pure function of
(config, seed) and iteration order cannot perturb results.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

from . import analytics, community, epidemic, topology, transfer
from .analytics import MetricsRow
from .community import CommunityStats, CohesionInput
from .config import WorldConfig
from .epidemic import (
    ChunkCensus,
    ChunkReplicaState,
    DeathCertificate,
    EpidemicParams,
    ReplicaState,
    apply_death_certificate,
    death_ttl,
    infection_ttl,
    issue_death_certificate,
    saturating_hazard,
    select_gossip_targets,
    step_chunk_states,
)
from .rng import substream
from .topology import (
    ClusterView,
    GetTree,
    NodeState,
    Role,
    bfs_hops,
    build_get_tree,
    connectivity_graph,
    form_clusters,
    probation_update,
    update_location,
)
from .transfer import (
    FailureReason,
    SessionStatus,
    TransferSession,
    run_chunk_exchange,
    total_transfer_delay,
)


class PhaseError(RuntimeError):
    """An invariant broke inside a tick; the message names the phase."""


class GetTreeInvariantError(RuntimeError):
    """The energy tree violated root-minimality, child energy or depth."""


def validate_get_tree(tree: GetTree, energies) -> None:
    """Check the three tree invariants; raise GetTreeInvariantError if broken."""
    in_tree = tree.nodes()
    root_energy = energies[tree.root]
    if any(energies[n] < root_energy for n in in_tree):
        raise GetTreeInvariantError(f"root {tree.root} is not the energy minimum")
    for _parent, child in tree.children:
        if energies[child] <= root_energy:
            raise GetTreeInvariantError(
                f"child {child} energy {energies[child]} not above root {root_energy}"
            )
    if tree.depth > 2:
        raise GetTreeInvariantError(f"tree depth {tree.depth} exceeds 2")


@dataclass(frozen=True)
class RunSummary:
    """Aggregates over one run's metric series."""

    ticks: int
    mean_sdr: float
    min_sdr: float
    max_sdr: float
    mean_eff: float
    mean_infected: float
    completed_files: int
    completed_sessions: int
    initiated_sessions: int
    respread_events: int


def _poisson(rng: random.Random, lam: float) -> int:
    """Knuth's method; fine for the desk-scale arrival rates used here."""
    if lam <= 0:
        return 0
    threshold = math.exp(-lam)
    count, product = 0, rng.random()
    while product > threshold:
        count += 1
        product *= rng.random()
    return count


class World:
    """Full mutable simulation state for one run."""

    def __init__(self, config: WorldConfig, audit: bool = False):
        config_problems = config.problems()
        if config_problems:
            raise ValueError("; ".join(config_problems))
        self.config = config
        self.params: EpidemicParams = config.epidemic
        self.audit = audit
        self.tick_count = 0

        seed = config.seed
        self.nodes: dict[int, NodeState] = {}
        for i in range(config.node_count):
            rng = substream(seed, "init", i)
            angle = rng.uniform(0.0, 2.0 * math.pi)
            self.nodes[i] = NodeState(
                id=i,
                loc=(rng.uniform(0.0, config.region_width),
                     rng.uniform(0.0, config.region_height)),
                speed=config.node_speed,
                direction=(math.cos(angle), math.sin(angle)),
                energy=rng.uniform(config.energy_min, config.energy_max),
                capacity=rng.randint(config.capacity_min, config.capacity_max),
            )
        self.retention: frozenset[int] = frozenset(
            i for i in self.nodes
            if substream(seed, "retention", i).random() < config.retention_fraction
        )

        # Catalog: file f owns chunks [f*m, (f+1)*m); each chunk has one origin.
        m = config.chunks_per_file
        self.chunk_file = {c: c // m for c in range(config.chunk_count)}
        self.file_chunks = {
            f: list(range(f * m, (f + 1) * m)) for f in range(config.file_count)
        }
        origin_state = (ReplicaState.INFECTED if config.origin_state == "infected"
                        else ReplicaState.RECOVERED)
        self.origins: dict[int, int] = {}
        self.replicas: dict[tuple[int, int], ChunkReplicaState] = {}
        self.census_counts: dict[int, dict[ReplicaState, int]] = {}
        self._held: dict[int, int] = {i: 0 for i in self.nodes}
        self._infected_by_node: dict[int, int] = {i: 0 for i in self.nodes}
        self._r_per_node_file: dict[tuple[int, int], int] = {}
        self._completed_files = 0
        for c in range(config.chunk_count):
            seeded = substream(seed, "origin", c).sample(
                range(config.node_count), config.origin_count
            )
            self.origins[c] = seeded[0]
            holders = set(seeded)
            counts = {state: 0 for state in ReplicaState}
            for i in self.nodes:
                if i in holders:
                    deadline = math.inf if origin_state is ReplicaState.INFECTED else None
                    rep = ChunkReplicaState(state=origin_state, since=0,
                                            infected_deadline=deadline)
                else:
                    rep = ChunkReplicaState()
                self.replicas[(i, c)] = rep
                counts[rep.state] += 1
            self.census_counts[c] = counts
            for holder in holders:
                self._held[holder] += 1
                if origin_state is ReplicaState.INFECTED:
                    self._infected_by_node[holder] += 1
                else:
                    key = (holder, self.chunk_file[c])
                    self._r_per_node_file[key] = self._r_per_node_file.get(key, 0) + 1
                    if self._r_per_node_file[key] == m:
                        self._completed_files += 1

        # Topology caches.
        self.graph: topology.Graph = {}
        self.components: list[frozenset[int]] = []
        self._graph_dirty = True
        self._energy_dirty = True
        self._roles_dirty = True
        self.clusters: list[ClusterView] = []
        self.cluster_by_node: dict[int, int] = {}
        self.get_trees: dict[int, GetTree] = {}
        self.relay_probs: dict[int, float] = {}
        self.failed_nodes: set[int] = set()

        # Certificates and purge bookkeeping.
        self.certificates: dict[int, DeathCertificate] = {}
        self.pending_deletions: list[int] = []
        self.pending_obsolete: list[tuple[int, int]] = []
        self.respread_events = 0

        # Session and community accounting.
        self.sessions_initiated = 0
        self.sessions_completed = 0
        self.sessions_expired = 0
        self.sessions_failed = 0
        self.packets_sent_total = 0
        self.packets_lost_total = 0
        self.sum_completed_delay = 0.0
        self.sum_all_delay = 0.0
        self.delivered_packets_total = 0
        self.total_dlds = 0
        self.w_factor = 0.0
        self.bped_accumulator = 0.0
        self.death_events_this_tick = 0
        self.total_eff_this_tick = 0.0
        self._dld_prev_tick = 0
        self._dld_this_tick = 0
        self._sharing_prev: set[int] = set()
        self._sharing_this: set[int] = set()
        self._exchange_window: dict[int, deque[tuple[int, int]]] = {}
        self._last_demand: dict[int, int] = {}
        self.metrics: list[MetricsRow] = []
        self._r_total = self._count_state(ReplicaState.RECOVERED)
        self.stats = CommunityStats(0.0, 0, 0, 0)

    # ------------------------------------------------------------------
    # Read-side helpers (the transfer and analytics contracts).

    def live_graph(self) -> topology.Graph:
        if not self.failed_nodes:
            return self.graph
        return {
            n: [p for p in peers if p not in self.failed_nodes]
            for n, peers in self.graph.items()
            if n not in self.failed_nodes
        }

    def path_weight(self, u: int, v: int) -> float:
        packet_bytes = self.config.chunk_bytes / self.config.packets_per_chunk
        return self.config.hop_delay.expected(packet_bytes)

    def cluster_of(self, node: int) -> Optional[int]:
        return self.cluster_by_node.get(node)

    def cluster_head(self, cluster_id: int) -> int:
        return cluster_id  # clusters are keyed by their head's node id

    def node_available(self, node: int) -> bool:
        return node not in self.failed_nodes

    def chunk_holders(self, chunk: int) -> list[int]:
        return sorted(
            n for n in self.nodes
            if self.replicas[(n, chunk)].state is ReplicaState.RECOVERED
            and n not in self.failed_nodes
        )

    def deadline_for(self, chunk: int) -> float:
        return self.params.tau

    def social_valid(self, a: int, b: int) -> bool:
        return community.k_valid(a, b, self.clusters, self.w_factor, self.relay_probs)

    def free_capacity(self, node: int) -> int:
        return self.nodes[node].capacity - self._held[node]

    def drain_energy(self, node: int, amount: float):
        state = self.nodes[node]
        state.energy = max(0.0, state.energy - amount)
        self._energy_dirty = True

    def diffuse_replica(self, node: int, chunk: int, now: int):
        """Epidemic copy used when a relay fails mid-transfer."""
        rep = self.replicas[(node, chunk)]
        if rep.state is ReplicaState.SUSCEPTIBLE and self.free_capacity(node) >= 1:
            self._infect(node, chunk, now)

    @property
    def hop_delay(self) -> transfer.HopDelayModel:
        return self.config.hop_delay

    @property
    def packets_per_chunk(self) -> int:
        return self.config.packets_per_chunk

    @property
    def chunk_bytes(self) -> float:
        return self.config.chunk_bytes

    @property
    def retry_budget(self) -> int:
        return self.config.retry_budget

    @property
    def energy_per_packet(self) -> float:
        return self.config.energy_per_packet

    def census(self, chunk: int) -> ChunkCensus:
        counts = self.census_counts[chunk]
        return ChunkCensus(
            s=counts[ReplicaState.SUSCEPTIBLE],
            i=counts[ReplicaState.INFECTED],
            r=counts[ReplicaState.RECOVERED],
            d=counts[ReplicaState.DEAD],
        )

    def infected_held_by(self, members: Iterable[int]) -> int:
        return sum(self._infected_by_node[n] for n in members)

    def completed_files(self) -> int:
        return self._completed_files

    def current_eff(self) -> float:
        loss = self.packets_lost_total / max(1, self.packets_sent_total)
        time = self.mean_transfer_delay() or 1.0
        return analytics.effective_throughput(
            loss, self.config.chunk_bytes, time, self.config.bandwidth
        )

    def mean_transfer_delay(self) -> float:
        if self.sessions_completed == 0:
            return 0.0
        return self.sum_completed_delay / self.sessions_completed

    def mean_end_to_end_delay(self) -> float:
        if self.delivered_packets_total == 0:
            return 0.0
        return self.sum_all_delay / self.delivered_packets_total

    def _count_state(self, state: ReplicaState) -> int:
        return sum(counts[state] for counts in self.census_counts.values())

    # ------------------------------------------------------------------
    # Replica transitions with incremental bookkeeping.

    def _bump(self, node: int, chunk: int, src: ReplicaState, dst: ReplicaState):
        counts = self.census_counts[chunk]
        counts[src] -= 1
        counts[dst] += 1
        if dst is ReplicaState.INFECTED:
            self._held[node] += 1
            self._infected_by_node[node] += 1
        if src is ReplicaState.INFECTED:
            self._infected_by_node[node] -= 1
        if dst is ReplicaState.RECOVERED:
            key = (node, self.chunk_file[chunk])
            self._r_per_node_file[key] = self._r_per_node_file.get(key, 0) + 1
            if self._r_per_node_file[key] == self.config.chunks_per_file:
                self._completed_files += 1
            self._r_total += 1
        if src is ReplicaState.RECOVERED:
            key = (node, self.chunk_file[chunk])
            if self._r_per_node_file.get(key, 0) == self.config.chunks_per_file:
                self._completed_files -= 1
            self._r_per_node_file[key] -= 1
            self._r_total -= 1
        if dst is ReplicaState.DEAD:
            self._held[node] -= 1
            self.death_events_this_tick += 1

    def _infect(self, node: int, chunk: int, now: int):
        census = self.census(chunk)
        ttl = infection_ttl(self.params, census.s, census.i)
        rep = self.replicas[(node, chunk)]
        rep.advance(ReplicaState.INFECTED, now, now + ttl)
        self._bump(node, chunk, ReplicaState.SUSCEPTIBLE, ReplicaState.INFECTED)

    def _finish_download(self, node: int, chunk: int, now: int, completed: bool):
        rep = self.replicas[(node, chunk)]
        rep.advance(ReplicaState.RECOVERED, now)
        self._bump(node, chunk, ReplicaState.INFECTED, ReplicaState.RECOVERED)
        if completed:
            self._dld_this_tick += 1
            self.total_dlds += 1

    def _purge(self, node: int, chunk: int, now: int):
        rep = self.replicas[(node, chunk)]
        if rep.state is ReplicaState.INFECTED:
            rep.advance(ReplicaState.RECOVERED, now)
            self._bump(node, chunk, ReplicaState.INFECTED, ReplicaState.RECOVERED)
        if rep.state is ReplicaState.RECOVERED:
            rep.advance(ReplicaState.DEAD, now)
            self._bump(node, chunk, ReplicaState.RECOVERED, ReplicaState.DEAD)

    # ------------------------------------------------------------------
    # Injection hooks for deletion/update experiments.

    def inject_deletion(self, chunk: int):
        """Origin marks the chunk deleted; certificate issued next tick."""
        self.pending_deletions.append(chunk)

    def inject_obsolete_update(self, node: int, chunk: int):
        """Deliver a stale update for a certified chunk to a node."""
        self.pending_obsolete.append((node, chunk))

    # ------------------------------------------------------------------
    # The tick itself.

    def tick(self) -> "World":
        now = self.tick_count + 1
        phase = "mobility"
        try:
            self._phase_mobility(now)
            phase = "connectivity"
            self._phase_connectivity()
            phase = "clustering"
            self._phase_clustering(now)
            phase = "community"
            self._phase_community()
            phase = "workload"
            self._phase_workload(now)
            phase = "epidemic"
            self._phase_epidemic(now)
            phase = "certificates"
            self._phase_certificates(now)
            phase = "metrics"
            self.tick_count = now
            self._phase_metrics(now)
        except (PhaseError, GetTreeInvariantError):
            raise
        except Exception as err:
            raise PhaseError(f"tick {now}, phase {phase}: {err}") from err
        return self

    def _phase_mobility(self, now: int):
        if self.config.node_speed <= 0:
            return
        region = self.config.region
        for i in sorted(self.nodes):
            node = self.nodes[i]
            rng = substream(self.config.seed, "mobility", now, i)
            if now >= node.next_turn_at:
                angle = rng.uniform(0.0, 2.0 * math.pi)
                node.direction = (math.cos(angle), math.sin(angle))
                dwell = rng.expovariate(1.0 / self.config.dir_dwell_mean)
                node.next_turn_at = now + max(1, math.ceil(dwell))
            node.loc, node.direction = update_location(
                node.loc, node.speed, node.direction, region
            )
        self._graph_dirty = True

    def _phase_connectivity(self):
        if not self._graph_dirty and self.graph:
            return
        self.graph = connectivity_graph(list(self.nodes.values()),
                                        self.config.radio_range)
        seen: set[int] = set()
        self.components = []
        for i in sorted(self.nodes):
            if i in seen:
                continue
            comp = frozenset(bfs_hops(self.graph, i))
            seen |= comp
            self.components.append(comp)
        self._graph_dirty = False
        self._roles_dirty = True

    def _phase_clustering(self, now: int):
        cfg = self.config
        changed = False
        for i in sorted(self.nodes):
            node = self.nodes[i]
            role = probation_update(node, now, cfg.t_s, len(self.graph[i]),
                                    cfg.min_cluster_density)
            if role is Role.FREE:
                role = Role.PROBATIONER
            if role is Role.PROBATIONER and node.role is not Role.PROBATIONER:
                node.joined_cluster_at = now
            if role is Role.RELAY_EXCLUDED:
                node.joined_cluster_at = None
            if role is not node.role:
                node.role = role
                changed = True
        if changed or self._roles_dirty or not self.clusters:
            clusters = form_clusters(self.graph, self.nodes, now, cfg.zone_radius_hops)
            # Preserve formation ticks of clusters that kept their head.
            formed = {c.id: c.formed_at for c in self.clusters}
            self.clusters = [
                ClusterView(id=c.id, head=c.head, members=c.members, edges=c.edges,
                            formed_at=formed.get(c.id, c.formed_at))
                for c in clusters
            ]
            self.cluster_by_node = {
                n: c.id for c in self.clusters for n in c.members
            }
            for c in self.clusters:
                self.nodes[c.head].role = Role.CLUSTER_HEAD
                for n in c.members:
                    if n != c.head:
                        self.nodes[n].role = Role.MEMBER
            self._roles_dirty = False
            self._energy_dirty = True
        for c in self.clusters:
            c.exchange_count = self._window_sum(c.id, now)
        if self._energy_dirty:
            energies = {i: n.energy for i, n in self.nodes.items()}
            self.get_trees = {
                c.id: build_get_tree(c, energies, self.graph) for c in self.clusters
            }
            if self.audit:
                for tree in self.get_trees.values():
                    validate_get_tree(tree, energies)
            self._energy_dirty = False

    def _window_sum(self, head: int, now: int) -> int:
        window = self._exchange_window.get(head)
        if not window:
            return 0
        horizon = now - self.config.h_window
        while window and window[0][0] < horizon:
            window.popleft()
        return sum(count for _, count in window)

    def _count_exchange(self, node_a: int, node_b: int, now: int):
        ca = self.cluster_by_node.get(node_a)
        if ca is not None and ca == self.cluster_by_node.get(node_b):
            self._exchange_window.setdefault(ca, deque()).append((now, 1))

    def _phase_community(self):
        hosted = sum(
            1 for counts in self.census_counts.values()
            if counts[ReplicaState.INFECTED] + counts[ReplicaState.RECOVERED] > 0
        )
        stats = CommunityStats(
            dld_rate=float(self._dld_prev_tick),
            sharing_chunks=len(self._sharing_prev),
            total_dlds=self.total_dlds,
            inactive_chunks=max(0, hosted - len(self._sharing_prev)),
        )
        self.stats = stats
        self.w_factor = community.streaming_factor(stats, self.config.w_max)
        self.relay_probs = {}
        for c in self.clusters:
            head = self.nodes[c.head]
            others = sorted(
                (n for n in c.members if n != c.head),
                key=lambda n: (math.dist(self.nodes[n].loc, head.loc), n),
            )
            if not others:
                self.relay_probs[c.id] = 0.0
                continue
            relay = self.nodes[others[0]]
            target = self.nodes[others[1]] if len(others) > 1 else relay
            self.relay_probs[c.id] = self.config.reach.path_probability(
                [head.loc, relay.loc, target.loc]
            )

    def _phase_workload(self, now: int):
        cfg = self.config
        if cfg.workload <= 0:
            return
        rng = substream(cfg.seed, "workload", now)
        arrivals = _poisson(rng, cfg.workload)
        if arrivals == 0:
            return
        eligible = sorted(i for i, n in self.nodes.items() if n.post_probation)
        if not eligible:
            return
        for _ in range(arrivals):
            requester = rng.choice(eligible)
            file_id = rng.randrange(cfg.file_count)
            missing = [
                c for c in self.file_chunks[file_id]
                if self.replicas[(requester, c)].state is ReplicaState.SUSCEPTIBLE
                and c not in self.certificates
            ]
            if not missing:
                continue
            chunk = missing[0]
            self._last_demand[chunk] = now
            holders = self.chunk_holders(chunk)
            if not holders:
                continue
            hops = bfs_hops(self.graph, requester)
            src = min(holders, key=lambda h: (hops.get(h, math.inf), h))
            session = run_chunk_exchange(
                self, src, requester, chunk, now,
                substream(cfg.seed, "exchange", now, requester, chunk),
            )
            self._account_session(session, requester, chunk, now)

    def _account_session(self, session: TransferSession, requester: int,
                         chunk: int, now: int):
        if session.packets_sent == 0:
            return  # rejected before the transfer began; not initiated
        self.sessions_initiated += 1
        self._sharing_this.add(chunk)
        self.packets_sent_total += session.packets_sent
        self.packets_lost_total += session.packets_lost
        delay = total_transfer_delay(session)
        self.sum_all_delay += delay
        self.delivered_packets_total += session.packets_delivered
        # Mid-transfer diffusion may already have infected the requester.
        if self.replicas[(requester, chunk)].state is ReplicaState.SUSCEPTIBLE:
            self._infect(requester, chunk, now)
        self._count_exchange(session.src, requester, now)
        if session.status is SessionStatus.COMPLETED:
            self.sessions_completed += 1
            self.sum_completed_delay += delay
            hops = len(session.path) - 1
            self.total_eff_this_tick += analytics.total_effective_throughput(
                [(hops, self.config.chunk_bytes * 8.0,
                  float(session.packets_delivered), max(delay, 1e-9))]
            )
            self._finish_download(requester, chunk, now, completed=True)
        else:
            if session.status is SessionStatus.EXPIRED:
                self.sessions_expired += 1
            else:
                self.sessions_failed += 1
            # Aborted transfers move to Recovered and do not retry; the
            # failure counts against SDR, not against the census.
            self._finish_download(requester, chunk, now, completed=False)

    def _phase_epidemic(self, now: int):
        cfg = self.config
        p = self.params
        epidemic_strategy = cfg.strategy == "epidemic"
        cluster_of_holder = self.cluster_by_node
        cluster_views = {c.id: c for c in self.clusters}
        for chunk in range(cfg.chunk_count):
            if chunk in self.certificates:
                continue
            for comp in self.components:
                sub = {(n, chunk): self.replicas[(n, chunk)] for n in sorted(comp)}
                census = epidemic.census_of(sub)
                if census.i == 0 and census.r == 0:
                    continue
                rng = substream(cfg.seed, "epidemic", now, chunk, min(comp))
                transitions = step_chunk_states(
                    census, sub, p, now, rng,
                    protected={(self.origins[chunk], chunk)},
                )
                for tr in transitions:
                    self._bump(tr.node, tr.chunk, tr.src, tr.dst)
                    if (tr.src is ReplicaState.INFECTED
                            and tr.dst is ReplicaState.RECOVERED):
                        if not tr.forced:
                            self._dld_this_tick += 1
                            self.total_dlds += 1
            # Replica push: the epidemic strategy gates on recent demand and
            # social validity; the random baseline sprays fanout neighbors
            # picked uniformly, with no community logic at all.
            last = self._last_demand.get(chunk)
            in_demand = last is not None and now - last <= cfg.h_window
            if epidemic_strategy and not in_demand:
                continue
            for holder in self.chunk_holders(chunk):
                neighbors = self.graph.get(holder, [])
                candidates = [
                    n for n in neighbors
                    if self.replicas[(n, chunk)].state is ReplicaState.SUSCEPTIBLE
                    and self.free_capacity(n) >= 1
                ]
                if not candidates:
                    continue
                rng = substream(cfg.seed, "gossip", now, holder, chunk)
                if epidemic_strategy:
                    valid = lambda peer, h=holder: self.social_valid(h, peer)
                    targets = set(select_gossip_targets(
                        holder, candidates, p.fanout, rng, valid))
                    cid = cluster_of_holder.get(holder)
                    if cid is not None:
                        ads = community.neighbor_feedback(
                            cluster_views[cid], chunk, cfg.feedback_k, holder,
                            self.graph,
                        )
                        targets.update(a for a in ads if a in candidates)
                else:
                    picks = rng.sample(neighbors, min(p.fanout, len(neighbors)))
                    targets = set(picks)
                for target in sorted(targets):
                    if (self.replicas[(target, chunk)].state
                            is ReplicaState.SUSCEPTIBLE
                            and self.free_capacity(target) >= 1):
                        self._infect(target, chunk, now)
                        self._count_exchange(holder, target, now)

    def _phase_certificates(self, now: int):
        p = self.params
        for chunk in self.pending_deletions:
            issue_death_certificate(self.certificates, chunk, now, p)
        self.pending_deletions.clear()
        for chunk, cert in sorted(self.certificates.items()):
            for node in sorted(self.nodes):
                rep = self.replicas[(node, chunk)]
                if rep.state not in (ReplicaState.INFECTED, ReplicaState.RECOVERED):
                    continue
                action = apply_death_certificate(cert, now, node in self.retention)
                if action.purge:
                    self._purge(node, chunk, now)
        for node, chunk in self.pending_obsolete:
            cert = self.certificates.get(chunk)
            if cert is None:
                continue
            action = apply_death_certificate(cert, now, node in self.retention,
                                             obsolete_update=True)
            if action.respread:
                # Certificate goes out to cluster neighbors and the head again.
                self.respread_events += 1
                if action.purge:
                    self._purge(node, chunk, now)
        self.pending_obsolete.clear()

    def _phase_metrics(self, now: int):
        self.bped_accumulator += (
            saturating_hazard(self.params.death_rate * now) * self._r_total
        )
        if self.audit:
            for chunk in range(self.config.chunk_count):
                counts = self.census_counts[chunk]
                recount = {state: 0 for state in ReplicaState}
                for n in self.nodes:
                    recount[self.replicas[(n, chunk)].state] += 1
                if recount != counts:
                    raise PhaseError(
                        f"census drift for chunk {chunk}: {counts} vs {recount}"
                    )
                if sum(counts.values()) != self.config.node_count:
                    raise PhaseError(f"census of chunk {chunk} does not sum to N")
        self.metrics.append(analytics.record_tick(self))
        self._dld_prev_tick = self._dld_this_tick
        self._dld_this_tick = 0
        self._sharing_prev = self._sharing_this
        self._sharing_this = set()
        self.death_events_this_tick = 0
        self.total_eff_this_tick = 0.0


def init_world(config: WorldConfig, audit: bool = False) -> World:
    return World(config, audit=audit)


def run(config: WorldConfig, audit: bool = False) -> tuple[list[MetricsRow], RunSummary, World]:
    """Execute a full run; returns the metric series, aggregates, final world."""
    world = init_world(config, audit=audit)
    for _ in range(config.ticks):
        world.tick()
    rows = world.metrics
    if rows:
        summary = RunSummary(
            ticks=config.ticks,
            mean_sdr=sum(r.sdr for r in rows) / len(rows),
            min_sdr=min(r.sdr for r in rows),
            max_sdr=max(r.sdr for r in rows),
            mean_eff=sum(r.eff for r in rows) / len(rows),
            mean_infected=sum(r.infected_mean for r in rows) / len(rows),
            completed_files=rows[-1].completed_files,
            completed_sessions=world.sessions_completed,
            initiated_sessions=world.sessions_initiated,
            respread_events=world.respread_events,
        )
    else:
        summary = RunSummary(ticks=0, mean_sdr=1.0, min_sdr=1.0, max_sdr=1.0,
                             mean_eff=1.0, mean_infected=0.0, completed_files=0,
                             completed_sessions=0, initiated_sessions=0,
                             respread_events=0)
    return rows, summary, world
