"""Acceptance gate: one test per release criterion.

Each test prints a single PASS/FAIL line for its criterion.  The audited
long runs are shared between the census and energy-tree criteria.  The
final test checks the wall-clock budget of this module and therefore must
stay last in the file.
"""

import itertools
import random
import time

import pytest

from gossipstream.analytics import LogisticParams, spreading_ratio
from gossipstream.community import CohesionInput, CommunityStats, cluster_cohesion, streaming_factor
from gossipstream.config import WorldConfig, with_overrides
from gossipstream.engine import init_world, run, validate_get_tree
from gossipstream.epidemic import EpidemicParams, ReplicaState, infection_rate, recovery_rate
from gossipstream.analytics import effective_throughput
from gossipstream.presets import get_preset
from gossipstream.report import compare_strategies, run_experiment
from gossipstream.transfer import min_delay_path, multipart_delay_estimate

MODULE_START = time.monotonic()
SUITE_BUDGET_SECONDS = 300.0


def report(criterion: str, ok: bool, detail: str = "") -> bool:
    tag = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{tag}] {criterion}{suffix}")
    return ok


@pytest.fixture(scope="module")
def audited_runs():
    """Five audited 2000-tick default-scale runs (n=50).

    The audit hook recounts every per-chunk census from the raw replica
    map each tick and revalidates every rebuilt energy tree, raising on
    the first violation; reaching the end means zero violations.
    """
    cfg = with_overrides(WorldConfig(), ticks=2000)
    worlds = []
    for seed in (1, 2, 3, 4, 5):
        _, _, world = run(with_overrides(cfg, seed=seed), audit=True)
        worlds.append(world)
    return cfg, worlds


def test_criterion_1_census_conservation(audited_runs):
    cfg, worlds = audited_runs
    violations = 0
    for world in worlds:
        for chunk in range(cfg.chunk_count):
            if world.census(chunk).n != cfg.node_count:
                violations += 1
    ok = report(
        "criterion 1: census conservation (5 seeds x 2000 audited ticks)",
        violations == 0, f"violations={violations}",
    )
    assert ok


def test_criterion_2_logistic_oracle():
    n, beta, i0, ticks, n_seeds = 50, 0.004, 10, 120, 1000
    base = with_overrides(
        WorldConfig(),
        node_count=n, node_speed=0.0, radio_range=5000.0, workload=0.0,
        file_count=1, chunks_per_file=1, origin_state="infected",
        origin_count=i0, ticks=ticks, epidemic__beta=beta,
        epidemic__gamma=0.0, epidemic__death_rate=0.0, epidemic__tau=1e9,
        capacity_min=1, capacity_max=1,
    )
    start = time.monotonic()
    acc = [0.0] * (ticks + 1)
    for seed in range(1, n_seeds + 1):
        world = init_world(with_overrides(base, seed=seed))
        acc[0] += world.census(0).i / n
        for t in range(1, ticks + 1):
            world.tick()
            acc[t] += world.census(0).i / n
    elapsed = time.monotonic() - start
    oracle = LogisticParams(beta=beta, n=n, i0=i0)
    linf = max(
        abs(acc[t] / n_seeds - spreading_ratio(oracle, t))
        for t in range(ticks + 1)
    )
    ok = report(
        "criterion 2: logistic oracle equivalence (1000 seeds)",
        linf <= 0.05 and elapsed <= 60.0,
        f"Linf={linf:.4f}, runtime={elapsed:.1f}s",
    )
    assert ok


def test_criterion_3_strategy_comparison():
    cfg = with_overrides(WorldConfig(), ticks=300)
    comparison = compare_strategies(cfg, seeds=list(range(1, 21)))
    warm_up = cfg.ticks // 2
    post = [e for e in comparison["per_tick"] if e["tick"] > warm_up]
    below_or_equal = sum(1 for e in post if e["infected_diff"] <= 0)
    share = below_or_equal / len(post)
    ok = report(
        "criterion 3: epidemic <= random infected per cluster (20 paired seeds)",
        share >= 0.90, f"share={share:.2%} of {len(post)} post-warm-up ticks",
    )
    assert ok


def test_criterion_4_sdr_floor_and_loss_monotonicity():
    preset = get_preset("fig11-sdr")
    worst = 1.0
    for _label, _seed, cfg in preset.configs(tuple(range(1, 11))):
        assert cfg.hop_delay.loss_prob <= 0.01
        rows, _, _ = run(cfg)
        worst = min(worst, min(r.sdr for r in rows))
    floor_ok = worst >= 0.95

    means = []
    for loss in (0.0, 0.05, 0.1, 0.2):
        vals = []
        for seed in (1, 2, 3, 4, 5):
            cfg = with_overrides(WorldConfig(), ticks=300, seed=seed,
                                 hop_delay__loss_prob=loss)
            _, summary, _ = run(cfg)
            vals.append(summary.mean_sdr)
        means.append(sum(vals) / len(vals))
    monotone_ok = all(a >= b for a, b in zip(means, means[1:]))
    ok = report(
        "criterion 4: SDR floor and loss monotonicity",
        floor_ok and monotone_ok,
        f"min per-tick SDR={worst:.4f}, sweep means="
        + ",".join(f"{m:.3f}" for m in means),
    )
    assert ok


def test_criterion_5_death_certificate_completeness():
    cfg = with_overrides(WorldConfig(), ticks=0, file_count=10,
                         chunks_per_file=5, seed=7)
    world = init_world(cfg)
    for _ in range(100):
        world.tick()
    for chunk in range(50):
        world.inject_deletion(chunk)
    world.tick()
    for _ in range(cfg.epidemic.t2 + 1):
        world.tick()
    live = sum(
        1 for (node, chunk), rep in world.replicas.items()
        if chunk in world.certificates
        and rep.state in (ReplicaState.INFECTED, ReplicaState.RECOVERED)
    )
    world.inject_obsolete_update(3, 0)
    world.tick()
    ok = report(
        "criterion 5: death-certificate completeness (50 deletions)",
        live == 0 and world.respread_events >= 1,
        f"live_replicas={live}, respread_events={world.respread_events}",
    )
    assert ok


def test_criterion_6_get_tree_invariants(audited_runs):
    _cfg, worlds = audited_runs
    # The audit in the shared fixture validated every rebuild; revalidate
    # the final trees here explicitly.
    checked = 0
    for world in worlds:
        energies = {i: n.energy for i, n in world.nodes.items()}
        for tree in world.get_trees.values():
            validate_get_tree(tree, energies)
            checked += 1
    ok = report(
        "criterion 6: energy-tree invariants (2000-tick audited runs)",
        checked > 0, f"final trees revalidated={checked}",
    )
    assert ok


def test_criterion_7_path_optimality():
    def all_simple_paths(graph, src, dst):
        stack = [(src, [src])]
        while stack:
            node, path = stack.pop()
            if node == dst:
                yield path
                continue
            for peer in graph[node]:
                if peer not in path:
                    stack.append((peer, path + [peer]))

    rng = random.Random(4242)
    mismatches = 0
    for _ in range(200):
        n = rng.randint(2, 8)
        graph = {i: [] for i in range(n)}
        weights = {}
        for a, b in itertools.combinations(range(n), 2):
            if rng.random() < 0.5:
                graph[a].append(b)
                graph[b].append(a)
                weights[(a, b)] = weights[(b, a)] = rng.uniform(0.1, 9.0)
        weight = lambda a, b: weights[(a, b)]
        result = min_delay_path(graph, weight, 0, n - 1)
        best = None
        for path in all_simple_paths(graph, 0, n - 1):
            cost = sum(weight(a, b) for a, b in zip(path, path[1:]))
            if best is None or cost < best:
                best = cost
        if best is None:
            if result is not None:
                mismatches += 1
        elif result is None or abs(result[1] - best) > 1e-9:
            mismatches += 1
    ok = report(
        "criterion 7: path optimality vs brute force (200 graphs)",
        mismatches == 0, f"mismatches={mismatches}",
    )
    assert ok


def test_criterion_8_determinism(tmp_path):
    preset = get_preset("fig6-infected")
    seeds = (1, 2)
    run_experiment(preset, tmp_path / "a", seeds=seeds, plots=False)
    run_experiment(preset, tmp_path / "b", seeds=seeds, plots=False)
    files_a = sorted((tmp_path / "a" / preset.name).glob("*.csv"))
    files_b = sorted((tmp_path / "b" / preset.name).glob("*.csv"))
    identical = (
        len(files_a) == len(files_b) > 0
        and all(x.read_bytes() == y.read_bytes()
                for x, y in zip(files_a, files_b))
    )
    ok = report(
        "criterion 8: byte-identical CSV output across invocations",
        identical, f"files={len(files_a)}",
    )
    assert ok


def test_criterion_9_formula_spot_suite():
    checks = {
        "streaming factor": streaming_factor(
            CommunityStats(10.0, 5, 25, 2)) == pytest.approx(1.0),
        "infection rate": infection_rate(
            EpidemicParams(beta=0.01), 5, 3, 11) == pytest.approx(0.15),
        "recovery rate": recovery_rate(
            EpidemicParams(gamma=0.2), 5) == pytest.approx(1.0),
        "multipart estimate": multipart_delay_estimate(
            100.0, 4, 16) == pytest.approx(100.0),
        "effective throughput": effective_throughput(
            0.5, 100.0, 10.0, 20.0) == pytest.approx(0.75),
        "complete-graph cohesion": cluster_cohesion(
            CohesionInput(6, 4, 0.9), 0.5) == pytest.approx(1.0),
    }
    failed = [name for name, passed in checks.items() if not passed]
    ok = report(
        "criterion 9: formula spot-suite",
        not failed, "all six identities" if not failed else f"failed: {failed}",
    )
    assert ok


def test_criterion_10_suite_budget():
    elapsed = time.monotonic() - MODULE_START
    ok = report(
        "criterion 10: acceptance suite wall-clock budget",
        elapsed < SUITE_BUDGET_SECONDS, f"elapsed={elapsed:.1f}s of 300s",
    )
    assert ok
