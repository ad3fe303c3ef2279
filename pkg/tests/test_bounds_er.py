import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from metastab.core.errors import InapplicableError, ParameterError
from metastab.services.bounds_er import (
    SIGMA_MIN,
    BoundReport,
    chernoff_lower_tail,
    chernoff_lower_tail_dense,
    chernoff_rate,
    complete_graph_exponent,
    dense_cut_failure_exponent,
    dense_growth_exponent,
    entropy,
    kl_bernoulli,
    sparse_growth_exponent,
    sparse_lemma_exponent,
    sparse_params,
    tau0_curve,
    tau0_sparse,
)


def test_entropy():
    assert entropy(0.0) == 0.0 and entropy(1.0) == 0.0
    assert entropy(0.5) == pytest.approx(math.log(2.0))
    assert entropy(0.2) == pytest.approx(entropy(0.8))
    assert np.allclose(entropy(np.array([0.1, 0.3])), [0.325082973, 0.610864302])
    with pytest.raises(ParameterError):
        entropy(1.2)


def test_kl_and_chernoff_rate():
    assert kl_bernoulli(0.3, 0.3) == pytest.approx(0.0, abs=1e-15)
    assert kl_bernoulli(0.1, 0.5) > 0
    assert chernoff_rate(1.0) == pytest.approx(0.0)
    assert chernoff_rate(0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("n,p,rho", [(100, 0.5, 0.5), (400, 0.1, 0.3), (1000, 0.02, 0.8), (50, 0.9, 0.6)])
def test_chernoff_tails_dominate_binomial(n, p, rho):
    exact = stats.binom.cdf(math.floor(rho * n * p), n, p)
    assert chernoff_lower_tail(n, p, rho) >= exact
    assert chernoff_lower_tail_dense(n, p, rho) >= exact
    # the KL form is the sharper of the two
    assert chernoff_lower_tail(n, p, rho) <= chernoff_lower_tail_dense(n, p, rho) + 1e-15


def test_tail_argument_checks():
    with pytest.raises(ParameterError):
        chernoff_lower_tail(10, 0.5, 1.0)
    with pytest.raises(ParameterError):
        chernoff_lower_tail_dense(-1, 0.5, 0.5)


def test_complete_graph_exponent_values():
    assert complete_graph_exponent(2.0) == pytest.approx(0.19315, abs=1e-5)
    assert complete_graph_exponent(math.e) == pytest.approx(1 / math.e, abs=1e-12)
    assert complete_graph_exponent(1.0) == pytest.approx(0.0)
    with pytest.raises(ParameterError):
        complete_graph_exponent(0.0)


def test_dense_growth_exponent():
    report = dense_growth_exponent(1000, 0.5, 2.0 / 500, 0.0)
    assert report.feasible and report.kind == "er-dense"
    assert report.growth_exponent == pytest.approx(0.19315, abs=1e-5)
    assert report.threshold_tau == pytest.approx(1 / 500)
    diverging = dense_growth_exponent(1000, 0.5, 0.2, 0.1, regime="diverging")
    assert diverging.growth_exponent == pytest.approx(0.9 * math.log(100.0))
    weak = dense_growth_exponent(1000, 0.5, 0.5 / 500, 0.0)
    assert not weak.feasible and weak.growth_exponent is None and weak.notes


def test_dense_cut_failure_is_negative_for_large_n():
    assert dense_cut_failure_exponent(1000, 0.5, 0.1, 0.5) < 0
    small = dense_cut_failure_exponent(20, 0.05, 0.1, 0.5)
    assert small > dense_cut_failure_exponent(2000, 0.05, 0.1, 0.5)


def test_report_rejects_growth_without_feasibility():
    with pytest.raises(ValidationError):
        BoundReport(kind="er-dense", growth_exponent=1.0, feasible=False)


def test_chernoff_rate_above_square_root_gap():
    rho = np.linspace(0.01, 0.99, 99)
    assert np.all(chernoff_rate(rho) > (1 - np.sqrt(rho)) ** 2)


def test_sparse_params_constants():
    sp = sparse_params(10.0)
    assert sp.gamma_sigma == pytest.approx(0.07493, abs=1e-3)
    assert sp.rho(0.5) > 0 and sp.rho(sp.gamma_sigma / 2) == 0.0
    assert sparse_params(1e6).rho(0.5) >= 0.99
    assert 0 < sp.c < 1
    assert sp.gamma_sigma < sp.gamma0 < 0.5


def test_sparse_requires_sigma_above_threshold():
    with pytest.raises(InapplicableError):
        sparse_params(SIGMA_MIN)
    report = sparse_growth_exponent(2.0, 1.0)
    assert not report.feasible and report.notes
    assert tau0_curve([2.0])[0][1] == math.inf


@pytest.mark.parametrize("sigma", [3.0, 10.0, 100.0, 1e4])
def test_sparse_lemma_exponent_negative_inside(sigma):
    sp = sparse_params(sigma)
    grid = np.linspace(sp.gamma_sigma, 1 - sp.gamma_sigma, 203)[1:-1]
    assert np.all(sparse_lemma_exponent(sigma, grid) < 0)


def test_tau0_curve_decreases_towards_one_over_sigma():
    rows = tau0_curve([3.0, 10.0, 1e2, 1e4, 1e8])
    scaled = [r[2] for r in rows]
    assert all(a > b for a, b in zip(scaled, scaled[1:]))
    assert 1.0 < scaled[-1] < 1.05
    for sigma, t0, s in rows:
        assert s == pytest.approx(sigma * t0)


def test_sparse_growth_just_above_threshold():
    t0 = tau0_sparse(5.0)
    report = sparse_growth_exponent(5.0, 1.01 * t0)
    assert report.feasible
    assert report.growth_exponent > 0
    assert report.terms["gamma0"] < report.terms["gamma1"]
    assert report.terms["conservative_exponent"] <= report.growth_exponent


def test_sparse_growth_below_threshold():
    t0 = tau0_sparse(5.0)
    report = sparse_growth_exponent(5.0, 0.9 * t0)
    assert not report.feasible and report.growth_exponent is None
    assert report.threshold_tau == pytest.approx(t0)


def test_sparse_growth_matches_asymptotic():
    sigma = 1e6
    report = sparse_growth_exponent(sigma, 1e3 / sigma)
    expected = math.log(1e3) + 1e-3 - 1
    assert report.terms["asymptotic_exponent"] == pytest.approx(expected)
    assert abs(report.growth_exponent - expected) <= 0.1 * expected


def test_sparse_slack_lowers_exponent():
    base = sparse_growth_exponent(50.0, 0.1)
    slack = sparse_growth_exponent(50.0, 0.1, eps=0.5)
    assert slack.growth_exponent == pytest.approx(base.growth_exponent - 0.5 / 50.0)
