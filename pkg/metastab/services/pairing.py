"""Mixed pairs in a uniform stub matching.

n1 red and n2 white stubs (B = n1 + n2) are paired uniformly at random; when B
is odd one stub stays unmatched. L counts the red-white pairs. With h = B // 2
and m the number of red-red pairs,

    P(L = l) = 2^l * C(h, l) * C(h - l, m) / C(B, n1)

where m depends on the parities of B and n1 - l (see ``_RED_PAIRS``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np
from scipy.special import gammaln, xlogy

from ..core.errors import ParameterError
from ..core.rng import stream


# (B % 2, (n1 - l) % 2) -> red-red pair count, or None when impossible
_RED_PAIRS: dict[tuple[int, int], Optional[Callable[[np.ndarray], np.ndarray]]] = {
    (0, 0): lambda r: r // 2,
    (0, 1): None,
    (1, 0): lambda r: r // 2,  # leftover stub is white
    (1, 1): lambda r: (r - 1) // 2,  # leftover stub is red
}

ENUMERATION_LIMIT = 14


@dataclass(frozen=True)
class PairingLaw:
    n1: int
    n2: int
    # pmf[l] = P(L = l) for l = 0 .. min(n1, n2)
    pmf: tuple[float, ...]

    def prob(self, l: int) -> float:
        return self.pmf[l] if 0 <= l < len(self.pmf) else 0.0

    def cdf(self) -> np.ndarray:
        return mixed_pair_cdf(self)

    @property
    def mean(self) -> float:
        p = np.asarray(self.pmf)
        return float(np.dot(np.arange(p.size), p))


@dataclass(frozen=True)
class PhiArgs:
    a1: float
    a2: float
    rho: float

    def __post_init__(self):
        for name in ("a1", "a2", "rho"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ParameterError(f"{name} must be finite and nonnegative, got {value!r}")


def _log_choose(n: np.ndarray, k: np.ndarray) -> np.ndarray:
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _check_counts(n1: int, n2: int) -> None:
    if n1 < 0 or n2 < 0:
        raise ParameterError(f"stub counts must be nonnegative, got ({n1}, {n2})")
    if n1 + n2 < 2:
        raise ParameterError(f"need at least two stubs, got n1 + n2 = {n1 + n2}")


def mixed_pair_log_pmf(n1: int, n2: int) -> np.ndarray:
    """log P(L = l) for l = 0 .. min(n1, n2); impossible values are -inf."""
    _check_counts(n1, n2)
    B = n1 + n2
    h = B // 2
    l = np.arange(min(n1, n2) + 1, dtype=np.int64)
    r = n1 - l
    out = np.full(l.size, -np.inf)
    for parity in (0, 1):
        red_pairs = _RED_PAIRS[(B % 2, parity)]
        sel = (r % 2) == parity
        if red_pairs is None or not sel.any():
            continue
        ls = l[sel]
        m = red_pairs(r[sel])
        ok = (m >= 0) & (m <= h - ls)
        logs = np.full(ls.size, -np.inf)
        logs[ok] = (
            ls[ok] * math.log(2.0)
            + _log_choose(h, ls[ok])
            + _log_choose(h - ls[ok], m[ok])
            - _log_choose(B, n1)
        )
        out[sel] = logs
    return out


def mixed_pair_pmf(n1: int, n2: int) -> PairingLaw:
    return PairingLaw(n1=n1, n2=n2, pmf=tuple(np.exp(mixed_pair_log_pmf(n1, n2)).tolist()))


def mixed_pair_cdf(law: PairingLaw) -> np.ndarray:
    """P(L <= l) for l = 0 .. min(n1, n2)."""
    return np.minimum(np.cumsum(law.pmf), 1.0)


# ---------------------------------------------------------------------------
# Monte Carlo and brute-force oracles


def _colors(n1: int, n2: int) -> np.ndarray:
    return np.concatenate([np.ones(n1, dtype=bool), np.zeros(n2, dtype=bool)])


def simulate_pairing(n1: int, n2: int, seed: int) -> int:
    """One draw of L from an explicit uniform matching."""
    _check_counts(n1, n2)
    shuffled = stream(seed, "pairing").permutation(_colors(n1, n2))
    pairs = shuffled[: 2 * ((n1 + n2) // 2)].reshape(-1, 2)
    return int(np.count_nonzero(pairs[:, 0] != pairs[:, 1]))


def sample_pairings(n1: int, n2: int, draws: int, seed: int, batch: int = 20_000) -> np.ndarray:
    """``draws`` independent values of L (vectorised ``simulate_pairing``)."""
    _check_counts(n1, n2)
    if draws < 1:
        raise ParameterError(f"draws must be >= 1, got {draws}")
    colors = _colors(n1, n2)
    B = colors.size
    usable = 2 * (B // 2)
    out = np.empty(draws, dtype=np.int64)
    for chunk, start in enumerate(range(0, draws, batch)):
        stop = min(draws, start + batch)
        rng = stream(seed, "pairing-batch", chunk)
        perm = np.argsort(rng.random((stop - start, B)), axis=1)
        shuffled = colors[perm][:, :usable].reshape(stop - start, -1, 2)
        out[start:stop] = np.count_nonzero(shuffled[:, :, 0] != shuffled[:, :, 1], axis=1)
    return out


def _matchings(items: tuple[int, ...]) -> Iterator[list[tuple[int, int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, partner in enumerate(rest):
        remaining = rest[:i] + rest[i + 1 :]
        for tail in _matchings(remaining):
            yield [(first, partner)] + tail


def enumerate_pairing_law(n1: int, n2: int) -> PairingLaw:
    """Exact law of L by listing every matching (and every leftover when B is odd)."""
    _check_counts(n1, n2)
    B = n1 + n2
    if B > ENUMERATION_LIMIT:
        raise ParameterError(f"exhaustive enumeration supports n1 + n2 <= {ENUMERATION_LIMIT}, got {B}")
    red = _colors(n1, n2)
    counts = [0] * (min(n1, n2) + 1)
    leftovers = range(B) if B % 2 else [None]
    for leftover in leftovers:
        stubs = tuple(i for i in range(B) if i != leftover)
        for matching in _matchings(stubs):
            mixed = sum(1 for a, b in matching if red[a] != red[b])
            counts[mixed] += 1
    total = sum(counts)
    return PairingLaw(n1=n1, n2=n2, pmf=tuple(c / total for c in counts))


# ---------------------------------------------------------------------------
# phi and the left-tail bound


def phi_values(a1, a2, rho) -> np.ndarray:
    """Vectorised phi(a1, a2; rho); zero wherever a1*a2 < rho*(a1 + a2)."""
    a1, a2, rho = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a1, a2, rho)))
    active = a1 * a2 >= rho * (a1 + a2)
    d1 = np.where(active, a1 - rho, 0.0)
    d2 = np.where(active, a2 - rho, 0.0)
    s = a1 + a2
    val = (
        0.5 * xlogy(s, s)
        + 0.5 * xlogy(d1, d1)
        + 0.5 * xlogy(d2, d2)
        - xlogy(a1, a1)
        - xlogy(a2, a2)
        + xlogy(rho, rho)
    )
    return np.where(active, np.maximum(val, 0.0), 0.0)


def phi(args: PhiArgs) -> float:
    return float(phi_values(args.a1, args.a2, args.rho))


def log_tail_bound(n1: int, n2: int, l) -> np.ndarray | float:
    """log of e * (l+1)^{3/2} * exp(-phi(n1, n2; l)); ``l`` may be an array."""
    if n1 < 0 or n2 < 0 or np.any(np.asarray(l) < 0):
        raise ParameterError("n1, n2 and l must be nonnegative")
    val = 1.0 + 1.5 * np.log1p(np.asarray(l, dtype=float)) - phi_values(n1, n2, l)
    return float(val) if np.ndim(val) == 0 else val


def tail_bound(n1: int, n2: int, l) -> np.ndarray | float:
    """Upper bound on P(L <= l) given n1 red and n2 white stubs."""
    return np.exp(log_tail_bound(n1, n2, l))


def tail_table(n1: int, n2: int) -> list[tuple[int, float, float]]:
    """(l, P(L = l), tail bound) rows for l = 0 .. min(n1, n2)."""
    law = mixed_pair_pmf(n1, n2)
    ls = np.arange(len(law.pmf))
    bounds = np.atleast_1d(tail_bound(n1, n2, ls))
    return [(int(l), float(p), float(b)) for l, p, b in zip(ls, law.pmf, bounds)]
