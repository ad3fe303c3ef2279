import math

import numpy as np
import pytest

from metastab.core.errors import ParameterError
from metastab.core.lognum import LogNumber
from metastab.services.birthdeath import (
    BirthDeathSpec,
    best_proposition_bound,
    complete_graph_bounds,
    complete_graph_spec,
    expected_hitting_times,
    hitting_lower_bound,
    hitting_upper_bound,
    log_hitting_times,
    proposition_lower_bound,
    solve_hitting_linear_system,
)
from metastab.services.bounds_er import complete_graph_exponent


def _random_spec(rng):
    k0 = int(rng.integers(0, 5))
    k1 = k0 + int(rng.integers(1, 61))
    birth = rng.uniform(0.1, 10.0, k1 - k0 - 1)
    if rng.random() < 0.5:
        return BirthDeathSpec.from_rates(k0, k1, birth)
    return BirthDeathSpec.from_rates(k0, k1, birth, rng.uniform(0.1, 10.0, k1 - k0))


def test_hand_solved_chain():
    spec = BirthDeathSpec.from_rates(0, 2, [1.0])
    h = expected_hitting_times(spec)
    assert h[0].log_value == -math.inf
    assert h[1].value == pytest.approx(1.5, abs=1e-12)
    assert h[2].value == pytest.approx(2.0, abs=1e-12)
    assert hitting_lower_bound(spec).value == pytest.approx(0.5, abs=1e-12)
    assert hitting_upper_bound(spec).value == pytest.approx(2.0, abs=1e-12)


def test_single_step_chain():
    spec = BirthDeathSpec.from_rates(1, 2, [])
    assert expected_hitting_times(spec)[2].value == pytest.approx(0.5, abs=1e-15)


def test_lower_bound_with_neutral_rates():
    spec = BirthDeathSpec.from_rates(1, 9, lambda k: float(k))
    assert hitting_lower_bound(spec).value == pytest.approx(1 / 9)
    # lam_i / i <= 1 everywhere: upper bound is (k1 - k0)^2 / 2
    assert hitting_upper_bound(spec).value == pytest.approx(0.5 * 8**2)


def test_sandwich_on_random_specs():
    rng = np.random.default_rng(20240917)
    for _ in range(100):
        spec = _random_spec(rng)
        logs = log_hitting_times(spec)[1:]
        lower = hitting_lower_bound(spec).log_value
        upper = hitting_upper_bound(spec).log_value
        assert np.all(lower <= logs + 1e-12)
        assert np.all(logs <= upper + 1e-12)


def test_strictly_increasing():
    rng = np.random.default_rng(1)
    for _ in range(20):
        logs = log_hitting_times(_random_spec(rng))
        assert np.all(np.diff(logs) > 0)


def test_matches_linear_system():
    rng = np.random.default_rng(2)
    for _ in range(30):
        k0 = int(rng.integers(0, 5))
        k1 = k0 + int(rng.integers(1, 200))
        spec = BirthDeathSpec.from_rates(k0, k1, rng.uniform(0.1, 1.5, k1 - k0 - 1))
        direct = solve_hitting_linear_system(spec)
        if not np.all(np.isfinite(direct)) or direct.max() > 1e12:
            continue
        logs = log_hitting_times(spec)
        assert np.allclose(logs[1:], np.log(direct[1:]), rtol=1e-9, atol=1e-9)


def test_time_rescaling():
    spec = complete_graph_spec(40, 1.5)
    logs = log_hitting_times(spec)
    scaled = log_hitting_times(spec.scaled(3.0))
    assert np.allclose(scaled[1:], logs[1:] - math.log(3.0), atol=1e-12)


def test_rates_must_be_positive():
    with pytest.raises(ParameterError):
        BirthDeathSpec.from_rates(0, 3, [1.0, 0.0])
    with pytest.raises(ParameterError):
        BirthDeathSpec.from_rates(0, 3, [1.0])
    with pytest.raises(ParameterError):
        BirthDeathSpec.from_rates(2, 2, [])


def test_complete_graph_rates():
    assert complete_graph_spec(2, 1.0).birth[0] == pytest.approx(0.5)
    spec = complete_graph_spec(10, 2.0)
    assert spec.birth[5 - 1] == pytest.approx(5.0)
    assert spec.k0 == 0 and spec.k1 == 10


def test_complete_graph_sandwich():
    spec = complete_graph_spec(50, 2.0)
    logs = log_hitting_times(spec)[1:]
    assert np.all(hitting_lower_bound(spec).log_value <= logs)
    assert np.all(logs <= hitting_upper_bound(spec).log_value)


def test_complete_graph_limit_n800():
    logs = log_hitting_times(complete_graph_spec(800, 2.0))
    assert abs(logs[-1] / 800 - (math.log(2.0) - 0.5)) <= 0.03


def test_complete_graph_bounds_order():
    b = complete_graph_bounds(200, 2.0)
    assert b.k1 == 100
    assert b.log_lower <= b.log_exact <= b.log_upper
    # all three agree to first order in N
    limit = complete_graph_exponent(2.0)
    for value in (b.log_lower, b.log_exact, b.log_upper):
        assert abs(value / 200 - limit) < 0.1


def test_proposition_examples():
    # tau M_k = k: every factor is 1
    assert proposition_lower_bound(1.0, lambda k: k, 1, 7).value == pytest.approx(1 / 7)
    n, lam = 30, 3.0
    direct = sum(math.log(lam / n * k * (n - k) / k) for k in range(2, 20)) - math.log(20)
    got = proposition_lower_bound(lam / n, {k: k * (n - k) for k in range(1, 30)}, 1, 20)
    assert got.log_value == pytest.approx(direct, abs=1e-12)


def test_proposition_needs_positive_cuts():
    with pytest.raises(ParameterError):
        proposition_lower_bound(0.5, lambda k: 0, 1, 5)
    with pytest.raises(ParameterError):
        proposition_lower_bound(0.5, {2: 3}, 1, 5)


def test_best_proposition_bound_picks_the_max():
    n, tau = 40, 2.0 / 40
    m = lambda k: k * (n - k)
    k1, best = best_proposition_bound(tau, m, 1, n - 1)
    for other in range(2, n):
        assert proposition_lower_bound(tau, m, 1, other) <= LogNumber(best.log_value + 1e-12)
    assert proposition_lower_bound(tau, m, 1, k1).log_value == pytest.approx(best.log_value)


def test_lognumber_arithmetic():
    a, b = LogNumber.from_value(3.0), LogNumber.from_value(4.0)
    assert (a + b).value == pytest.approx(7.0)
    assert (a * b).value == pytest.approx(12.0)
    assert (b / a).value == pytest.approx(4 / 3)
    assert (a**2).value == pytest.approx(9.0)
    assert LogNumber.sum([a, b, LogNumber.zero()]).value == pytest.approx(7.0)
    assert LogNumber(1000.0).value == math.inf
    assert a < b
    with pytest.raises(ValueError):
        LogNumber.from_value(-1.0)
