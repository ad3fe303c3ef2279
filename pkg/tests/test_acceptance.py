"""Cross-module checks: exact solvers against the simulator and the analytic bounds."""
import math

import numpy as np
import pytest

from metastab.services.birthdeath import (
    best_proposition_bound,
    complete_graph_spec,
    log_hitting_times,
)
from metastab.services.bounds_cm import (
    C4,
    PsiQuery,
    get_rate_function,
    metastability_condition,
    poisson_threshold,
    psi,
)
from metastab.services.bounds_er import LOG2, chernoff_rate, entropy, sparse_params, tau0_curve
from metastab.services.contact import ContactConfig, estimate_mean_extinction, run_replications, summarize
from metastab.services.graph import DegreeDistribution, Graph, gen_erdos_renyi, min_cuts_by_size


def test_complete_graph_exponent_converges():
    limit = math.log(2.0) - 0.5
    gaps = []
    for n in (100, 200, 400, 800):
        per_node = log_hitting_times(complete_graph_spec(n, 2.0))[-1] / n
        gaps.append(abs(per_node - limit))
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] <= 0.03


def test_simulator_matches_exact_chain_on_k30():
    n, lam = 30, 0.8
    exact = math.exp(log_hitting_times(complete_graph_spec(n, lam))[-1])
    est = estimate_mean_extinction(Graph.complete(n), ContactConfig(tau=lam / n, seed=2024), 10_000, threads=1)
    assert est.censored_count == 0
    assert abs(est.mean - exact) <= 3 * est.stderr


@pytest.mark.parametrize(
    "dist",
    [DegreeDistribution.constant(4), DegreeDistribution.poisson(3.0), DegreeDistribution.empirical({1: 0.2, 3: 0.5, 6: 0.3})],
)
def test_rate_function_vanishes_at_mean_and_is_convex(dist):
    rf = get_rate_function(dist, "numeric")
    assert rf(dist.mean) == pytest.approx(0.0, abs=1e-10)
    if dist.is_degenerate:
        return
    lo, hi = dist.support()
    top = hi if hi is not None else 3 * dist.mean
    xs = np.linspace(lo + 0.05, top - 0.05, 41)
    mids = 0.5 * (xs[:-1] + xs[1:])
    R, _ = rf.evaluate(xs)
    Rm, _ = rf.evaluate(mids)
    assert np.all(Rm <= 0.5 * (R[:-1] + R[1:]) + 1e-10)


def test_constant_psi_matches_entropy_on_grid():
    dist = DegreeDistribution.constant(4)
    for g in np.arange(1, 10) / 10:
        assert psi(dist, PsiQuery(gamma=float(g), rho=0.0)).value == pytest.approx(2.0 * entropy(g), abs=1e-6)


def test_published_thresholds():
    assert poisson_threshold() == pytest.approx(2.36, abs=0.01)
    assert round(poisson_threshold(conditioned=True), 2) == 1.88
    assert round(C4 * C4, 2) == 4.24
    for d in (3, 4, 10):
        assert metastability_condition(DegreeDistribution.constant(d))[0]
    assert not metastability_condition(DegreeDistribution.constant(2))[0]
    scaled = [row[2] for row in tau0_curve([3.0, 10.0, 1e2, 1e4, 1e8])]
    assert all(a > b for a, b in zip(scaled, scaled[1:]))
    assert scaled[-1] < 1.05


@pytest.mark.parametrize("sigma", [3.0, 5.0, 10.0, 100.0])
def test_sparse_cut_inequality_on_fine_grid(sigma):
    sp = sparse_params(sigma)
    g = np.linspace(sp.gamma_sigma, 1 - sp.gamma_sigma, 10_002)[1:-1]
    assert np.all(sigma * chernoff_rate(sp.rho(g)) * g * (1 - g) > entropy(g))
    assert sp.gamma_sigma * (1 - sp.gamma_sigma) == pytest.approx(LOG2 / sigma)


def test_proposition_bound_below_simulated_mean():
    g = gen_erdos_renyi(20, 0.5, seed=20240917)
    tau = 0.4
    cuts = min_cuts_by_size(g, 1, 19)
    assert min(cuts.values()) > 0
    k1, bound = best_proposition_bound(tau, cuts, 1, 19)
    assert k1 > 2
    # E[T] is out of reach of a few hundred runs; E[min(T, t_max)] <= E[T] keeps this one-sided
    cfg = ContactConfig(tau=tau, t_max=3.0 * bound.value, seed=11)
    est = summarize(run_replications(g, cfg, 200, threads=1), cfg)
    assert bound.value <= est.restricted_mean + 3 * est.restricted_stderr
