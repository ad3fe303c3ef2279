import math

import numpy as np
import pytest

from metastab.core.errors import NoUncensoredSamplesError, ParameterError
from metastab.services.contact import (
    ContactConfig,
    SumTree,
    estimate_mean_extinction,
    infected_trajectory,
    run_replications,
    simulate_extinction,
    summarize,
)
from metastab.services.graph import Graph, gen_erdos_renyi

Z = 4.0


def _within(estimate, target, sigmas=3.0):
    return abs(estimate.mean - target) <= sigmas * estimate.stderr


def test_config_validation():
    with pytest.raises(ParameterError):
        ContactConfig(tau=-0.1)
    with pytest.raises(ParameterError):
        ContactConfig(tau=1.0, initial=frozenset())
    with pytest.raises(ParameterError):
        ContactConfig(tau=1.0, t_max=0.0)
    with pytest.raises(ParameterError):
        ContactConfig(tau=1.0, initial=frozenset({7})).initial_nodes(5)
    assert ContactConfig(tau=0.0).initial_nodes(3).tolist() == [0, 1, 2]


def test_sum_tree_find():
    tree = SumTree(5)
    tree.add(np.arange(5), np.array([0, 3, 0, 2, 1]))
    assert tree.total == 6
    hits = [tree.find(r) for r in range(6)]
    assert hits == [1, 1, 1, 3, 3, 4]
    tree.add(np.array([1]), np.array([-3]))
    assert tree.consistent() and tree.total == 3


def test_isolated_node_is_exponential():
    g = Graph.from_edges(1, [])
    est = estimate_mean_extinction(g, ContactConfig(tau=1.0, seed=1), 10_000, threads=1)
    assert _within(est, 1.0)
    assert est.stderr == pytest.approx(0.01, rel=0.1)


def test_two_nodes_without_infection():
    g = Graph.from_edges(2, [(0, 1)])
    est = estimate_mean_extinction(g, ContactConfig(tau=0.0, seed=2), 20_000, threads=1)
    assert _within(est, 1.5)


def test_pure_death_chain_harmonic_mean():
    n = 10
    est = estimate_mean_extinction(Graph.complete(n), ContactConfig(tau=0.0, seed=3), 20_000, threads=1)
    assert _within(est, sum(1.0 / k for k in range(1, n + 1)))


def test_replications_are_reproducible_and_ordered():
    g = gen_erdos_renyi(20, 0.3, seed=4)
    cfg = ContactConfig(tau=0.3, t_max=50.0, seed=9)
    serial = run_replications(g, cfg, 8, threads=1)
    parallel = run_replications(g, cfg, 8, threads=3)
    assert [s.index for s in parallel] == list(range(8))
    assert [s.time for s in serial] == [s.time for s in parallel]
    assert simulate_extinction(g, cfg, index=5) == serial[5]


def test_all_censored_raises_with_restricted_mean():
    g = Graph.complete(30)
    cfg = ContactConfig(tau=3.0 / 30, t_max=2.0, seed=5)
    with pytest.raises(NoUncensoredSamplesError) as info:
        estimate_mean_extinction(g, cfg, 20, threads=1)
    est = info.value.estimate
    assert est.uncensored == 0 and est.censored_count == 20
    assert est.mean is None
    assert est.restricted_mean == pytest.approx(2.0)


def test_summary_counts_censored_separately():
    g = Graph.complete(12)
    cfg = ContactConfig(tau=0.1, t_max=3.0, seed=6)
    samples = run_replications(g, cfg, 200, threads=1)
    est = summarize(samples, cfg)
    assert est.uncensored + est.censored_count == 200
    done = [s.time for s in samples if not s.censored]
    assert est.mean == pytest.approx(math.fsum(done) / len(done))
    assert est.restricted_mean <= 3.0
    assert est.restricted_mean >= est.mean * est.uncensored / 200


def test_jump_chain_matches_birth_death_transitions():
    n, lam = 10, 1.5
    cfg = ContactConfig(tau=lam / n, seed=7)
    samples = run_replications(Graph.complete(n), cfg, 2000, threads=1, track_jumps=True)
    up = np.sum([s.up_jumps for s in samples], axis=0)
    down = np.sum([s.down_jumps for s in samples], axis=0)
    for k in range(1, n):
        total = up[k] + down[k]
        if total < 200:
            continue
        birth = lam * k * (n - k) / n
        p = birth / (birth + k)
        assert abs(up[k] / total - p) <= Z * math.sqrt(p * (1 - p) / total), k
    assert up[n] == 0


def test_bookkeeping_audit_passes_every_event():
    g = gen_erdos_renyi(40, 0.15, seed=8)
    cfg = ContactConfig(tau=0.5, t_max=5.0, seed=8)
    sample = simulate_extinction(g, cfg, audit_interval=1)
    assert sample.events > 0


def test_multiedges_raise_infection_pressure():
    single = Graph.from_edges(2, [(0, 1)])
    heavy = Graph.from_edges(2, [(0, 1, 5)])
    cfg = ContactConfig(tau=1.0, seed=10)
    light = estimate_mean_extinction(single, cfg, 4000, threads=1)
    strong = estimate_mean_extinction(heavy, cfg, 4000, threads=1)
    assert strong.mean > light.mean


def test_trajectory_basics():
    g = Graph.complete(20)
    times = np.linspace(0.0, 10.0, 41).tolist()
    path = infected_trajectory(g, ContactConfig(tau=0.0, seed=11), times)
    assert path[0] == 20
    assert all(a >= b for a, b in zip(path, path[1:]))
    with pytest.raises(ParameterError):
        infected_trajectory(g, ContactConfig(tau=0.0), [2.0, 1.0])


def test_trajectory_plateau_on_supercritical_complete_graph():
    n, lam = 50, 3.0
    times = np.linspace(5.0, 50.0, 200).tolist()
    path = infected_trajectory(Graph.complete(n), ContactConfig(tau=lam / n, seed=12), times)
    level = n * (1 - 1 / lam)
    assert abs(np.mean(path) - level) < 5.0
    assert min(path) > 0
