"""Expected hitting times of birth-death chains, in log domain.

A chain on {k0, ..., k1} moves k -> k+1 at rate birth[k] (k0 < k < k1) and
k -> k-1 at rate death[k] (k0 < k <= k1). H_k is the expected time to reach
k0 from k. With d_k = H_k - H_{k-1},

    d_k1 = 1 / death[k1],   d_k = 1 / death[k] + (birth[k] / death[k]) * d_{k+1}

so d_k = sum_{j >= k} (1/death[j]) prod_{i=k}^{j-1} birth[i]/death[i], a sum of
positive terms. Both sums are taken with log-sum-exp, so nothing overflows
even when H grows like e^{cN}.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_banded

from ..core.errors import BookkeepingError, ParameterError
from ..core.lognum import LogNumber

log = logging.getLogger("metastab.birthdeath")

MAX_SPAN = 10_000_000

RateSource = Union[Callable[[int], float], Sequence[float], np.ndarray]
CutSource = Union[Callable[[int], float], Mapping[int, float]]


def _rates(source: RateSource, ks: np.ndarray, name: str) -> np.ndarray:
    if callable(source):
        values = np.fromiter((float(source(int(k))) for k in ks), dtype=float, count=ks.size)
    else:
        values = np.asarray(source, dtype=float)
        if values.shape != ks.shape:
            raise ParameterError(f"{name} needs {ks.size} values (states {ks[:1].tolist()}..), got {values.size}")
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        bad = ks[~(np.isfinite(values) & (values > 0))][0]
        raise ParameterError(f"{name} must be strictly positive; state {bad} has {values[ks == bad][0]!r}")
    return values


@dataclass(frozen=True, eq=False)
class BirthDeathSpec:
    k0: int
    k1: int
    # birth[i] is the rate at state k0 + 1 + i (interior states k0 < k < k1)
    birth: np.ndarray
    # death[i] is the rate at state k0 + 1 + i (states k0 < k <= k1)
    death: np.ndarray
    default_death: bool = True

    def __post_init__(self):
        if self.k0 < 0 or self.k1 <= self.k0:
            raise ParameterError(f"need 0 <= k0 < k1, got k0={self.k0}, k1={self.k1}")
        if self.k1 - self.k0 > MAX_SPAN:
            raise ParameterError(f"k1 - k0 = {self.k1 - self.k0} exceeds {MAX_SPAN}")
        birth = np.asarray(self.birth, dtype=float)
        death = np.asarray(self.death, dtype=float)
        if birth.size != self.k1 - self.k0 - 1 or death.size != self.k1 - self.k0:
            raise ParameterError("rate arrays do not match the state range")
        if np.any(~np.isfinite(birth) | (birth <= 0)) or np.any(~np.isfinite(death) | (death <= 0)):
            raise ParameterError("all interior rates must be strictly positive")
        birth.setflags(write=False)
        death.setflags(write=False)
        object.__setattr__(self, "birth", birth)
        object.__setattr__(self, "death", death)

    @classmethod
    def from_rates(cls, k0: int, k1: int, birth: RateSource, death: Optional[RateSource] = None) -> "BirthDeathSpec":
        if k0 < 0 or k1 <= k0:
            raise ParameterError(f"need 0 <= k0 < k1, got k0={k0}, k1={k1}")
        interior = np.arange(k0 + 1, k1, dtype=np.int64)
        upper = np.arange(k0 + 1, k1 + 1, dtype=np.int64)
        b = _rates(birth, interior, "birth rate")
        if death is None:
            d = upper.astype(float)
        else:
            d = _rates(death, upper, "death rate")
        return cls(k0=k0, k1=k1, birth=b, death=d, default_death=death is None)

    @property
    def states(self) -> np.ndarray:
        return np.arange(self.k0, self.k1 + 1, dtype=np.int64)

    def scaled(self, c: float) -> "BirthDeathSpec":
        """Same chain run c times faster."""
        if not c > 0:
            raise ParameterError(f"scale must be positive, got {c}")
        return BirthDeathSpec(self.k0, self.k1, self.birth * c, self.death * c, default_death=False)

    def _log_ratios(self) -> np.ndarray:
        # log(birth[i] / death[i]) over the interior states
        return np.log(self.birth) - np.log(self.death[:-1])


def log_hitting_times(spec: BirthDeathSpec) -> np.ndarray:
    """log H_k for k = k0 .. k1 (first entry is -inf)."""
    log_mu = np.log(spec.death)
    prefix = np.concatenate([[0.0], np.cumsum(spec._log_ratios())])
    terms = prefix - log_mu
    suffix = np.logaddexp.accumulate(terms[::-1])[::-1]
    log_d = suffix - prefix
    if not np.all(np.isfinite(log_d)):
        raise BookkeepingError("non-finite log increment in hitting-time recursion")
    out = np.empty(spec.k1 - spec.k0 + 1)
    out[0] = -math.inf
    out[1:] = np.logaddexp.accumulate(log_d)
    return out


def expected_hitting_times(spec: BirthDeathSpec) -> dict[int, LogNumber]:
    logs = log_hitting_times(spec)
    return {int(k): LogNumber(float(v)) for k, v in zip(spec.states, logs)}


def hitting_lower_bound(spec: BirthDeathSpec) -> LogNumber:
    """(1 / death[k1]) * prod over interior states of birth/death."""
    return LogNumber(float(np.sum(spec._log_ratios()) - math.log(spec.death[-1])))


def hitting_upper_bound(spec: BirthDeathSpec) -> LogNumber:
    """Upper bound on every H_k.

    Default deaths (death[k] = k) with k1 >= 2 use
    (1/2)(k1-k0)^2 * max_{k <= j} prod_{i=k+1}^{j} birth[i]/i. Custom death
    rates use n(n+1)/2 * max_{k <= j} (1/death[j]) prod_{i=k}^{j-1} birth[i]/death[i]
    with n = k1 - k0, one term per (k, j) pair in the double sum for H_k1.
    """
    n = spec.k1 - spec.k0
    ratios = spec._log_ratios()
    if spec.default_death and spec.k1 >= 2:
        s = np.concatenate([[0.0], np.cumsum(ratios)])
        best = float(np.max(s - np.minimum.accumulate(s)))
        return LogNumber(2 * math.log(n) - math.log(2.0) + best)
    prefix = np.concatenate([[0.0], np.cumsum(ratios)])
    best = float(np.max(prefix - np.log(spec.death) - np.minimum.accumulate(prefix)))
    return LogNumber(math.log(n) + math.log(n + 1) - math.log(2.0) + best)


def solve_hitting_linear_system(spec: BirthDeathSpec) -> np.ndarray:
    """H_k for k = k0 .. k1 from the tridiagonal first-step equations.

    Plain floating point; the independent oracle for ``expected_hitting_times``
    while the values fit a double.
    """
    n = spec.k1 - spec.k0
    lam = np.concatenate([spec.birth, [0.0]])
    mu = spec.death
    # rows: (lam_k + mu_k) H_k - lam_k H_{k+1} - mu_k H_{k-1} = 1, H_{k0} = 0
    ab = np.zeros((3, n))
    ab[0, 1:] = -lam[:-1]
    ab[1, :] = lam + mu
    ab[2, :-1] = -mu[1:]
    h = solve_banded((1, 1), ab, np.ones(n))
    return np.concatenate([[0.0], h])


# ---------------------------------------------------------------------------
# Complete graph


def complete_graph_spec(n: int, lam: float) -> BirthDeathSpec:
    """Number of infected nodes on K_n: birth lam*k*(n-k)/n, death k, on [0, n]."""
    if n < 2:
        raise ParameterError(f"complete graph needs n >= 2, got {n}")
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    k = np.arange(1, n, dtype=float)
    return BirthDeathSpec.from_rates(0, n, lam * k * (n - k) / n)


@dataclass(frozen=True)
class CompleteGraphBounds:
    n: int
    lam: float
    log_exact: float
    log_upper: float
    # None when (1 - 1/lam) n leaves no room for k1 > k0 = 1
    log_lower: Optional[float]
    k1: Optional[int]


def complete_graph_bounds(n: int, lam: float) -> CompleteGraphBounds:
    """Exact log H_n on K_n with the explicit upper and lower bounds."""
    spec = complete_graph_spec(n, lam)
    log_exact = float(log_hitting_times(spec)[-1])

    top = math.floor((1.0 - 1.0 / lam) * n) if lam > 1 else -1
    ks = np.arange(0, top + 1, dtype=float)
    log_upper = 2 * math.log(n) - math.log(2.0) + float(np.sum(np.log(lam * (n - ks) / n)))

    k1 = math.ceil((1.0 - 1.0 / lam) * n) if lam > 1 else None
    log_lower = None
    if k1 is not None and 1 < k1 < n:
        log_lower = proposition_lower_bound(lam / n, lambda k: k * (n - k), 1, k1).log_value
    else:
        k1 = None
    return CompleteGraphBounds(n=n, lam=lam, log_exact=log_exact, log_upper=log_upper, log_lower=log_lower, k1=k1)


# ---------------------------------------------------------------------------
# Cut-based bound on the extinction time


def _cut_values(m: CutSource, ks: np.ndarray) -> np.ndarray:
    if callable(m):
        values = np.fromiter((float(m(int(k))) for k in ks), dtype=float, count=ks.size)
    else:
        try:
            values = np.array([float(m[int(k)]) for k in ks])
        except KeyError as e:
            raise ParameterError(f"no cut value for k={e.args[0]}") from e
    if np.any(values < 1):
        bad = int(ks[np.argmax(values < 1)])
        raise ParameterError(f"M_k must be >= 1 on the range; M_{bad} = {values[ks == bad][0]!r}")
    return values


def _proposition_terms(tau: float, m: CutSource, k0: int, k1: int) -> np.ndarray:
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    if not (0 < k0 < k1):
        raise ParameterError(f"need 0 < k0 < k1, got k0={k0}, k1={k1}")
    ks = np.arange(k0 + 1, k1, dtype=np.int64)
    return np.log(tau * _cut_values(m, ks) / ks)


def proposition_lower_bound(tau: float, m: CutSource, k0: int, k1: int) -> LogNumber:
    """E[T] >= (1/k1) prod_{k=k0+1}^{k1-1} tau * M_k / k, given L_S >= M_|S|."""
    return LogNumber(float(np.sum(_proposition_terms(tau, m, k0, k1)) - math.log(k1)))


def best_proposition_bound(tau: float, m: CutSource, k0: int, k_max: int) -> tuple[int, LogNumber]:
    """Largest proposition bound over k0 < k1 <= k_max, with its k1."""
    if k_max <= k0:
        raise ParameterError(f"need k_max > k0, got k0={k0}, k_max={k_max}")
    terms = _proposition_terms(tau, m, k0, k_max)
    k1s = np.arange(k0 + 1, k_max + 1)
    logs = np.concatenate([[0.0], np.cumsum(terms)]) - np.log(k1s)
    i = int(np.argmax(logs))
    log.debug("best proposition bound: k1=%s log=%s", k1s[i], logs[i])
    return int(k1s[i]), LogNumber(float(logs[i]))
