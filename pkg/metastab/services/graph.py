"""Random multigraphs and edge-boundary (cut) computations.

Graphs are immutable undirected multigraphs stored as sorted edge arrays
(u < v, multiplicity >= 1). Self-loops are never stored. The cut of a node set
S is L_S = sum over i in S, j outside S of A_ij, multiplicities included.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Literal, Optional

import networkx as nx
import numpy as np
from scipy import sparse

from ..core.config import get_settings
from ..core.errors import BudgetExceededError, ParameterError
from ..core.rng import stream

log = logging.getLogger("metastab.graph")

PMF_TOLERANCE = 1e-12
# Upper bound on (subsets x pairs) materialised per enumeration chunk.
_CHUNK_CELLS = 2_000_000


# ---------------------------------------------------------------------------
# Degree distributions


@dataclass(frozen=True)
class DegreeDistribution:
    kind: Literal["constant", "poisson", "empirical"]
    d: int = 0
    mu: float = 0.0
    # pmf over {0, 1, ..., d_max}; only for kind == "empirical"
    pmf: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "constant":
            if int(self.d) != self.d or self.d < 0:
                raise ParameterError(f"constant degree must be a nonnegative integer, got {self.d!r}")
        elif self.kind == "poisson":
            if not (self.mu > 0 and math.isfinite(self.mu)):
                raise ParameterError(f"Poisson mean must be positive, got {self.mu!r}")
        elif self.kind == "empirical":
            p = np.asarray(self.pmf, dtype=float)
            if p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
                raise ParameterError("empirical pmf must be a nonempty list of nonnegative numbers")
            if abs(p.sum() - 1.0) > PMF_TOLERANCE:
                raise ParameterError(f"empirical pmf sums to {p.sum()!r}, expected 1")
        else:
            raise ParameterError(f"unknown degree distribution kind: {self.kind!r}")

    @classmethod
    def constant(cls, d: int) -> "DegreeDistribution":
        return cls(kind="constant", d=int(d))

    @classmethod
    def poisson(cls, mu: float) -> "DegreeDistribution":
        return cls(kind="poisson", mu=float(mu))

    @classmethod
    def empirical(cls, pmf: Iterable[float] | dict[int, float]) -> "DegreeDistribution":
        if isinstance(pmf, dict):
            if any(int(k) < 0 for k in pmf):
                raise ParameterError("empirical support must be nonnegative")
            d_max = max(int(k) for k in pmf)
            values = [0.0] * (d_max + 1)
            for k, v in pmf.items():
                values[int(k)] += float(v)
        else:
            values = [float(v) for v in pmf]
        while len(values) > 1 and values[-1] == 0.0:
            values.pop()
        return cls(kind="empirical", pmf=tuple(values))

    @classmethod
    def parse(cls, text: str) -> "DegreeDistribution":
        """Parse ``constant:d``, ``poisson:mu`` or ``empirical:<file|k=p,...>``."""
        kind, _, value = (text or "").partition(":")
        kind = kind.strip().lower()
        value = value.strip()
        if not value:
            raise ParameterError(f"degree distribution needs a parameter: {text!r}")
        try:
            if kind == "constant":
                return cls.constant(int(value))
            if kind == "poisson":
                return cls.poisson(float(value))
            if kind == "empirical":
                if "=" in value:
                    items = {}
                    for part in value.split(","):
                        k, _, p = part.partition("=")
                        items[int(k)] = float(p)
                    return cls.empirical(items)
                return cls.empirical(_read_pmf_file(Path(value)))
        except ParameterError:
            raise
        except ValueError as e:
            raise ParameterError(f"bad degree distribution parameter: {text!r}") from e
        raise ParameterError(f"unknown degree distribution: {text!r}")

    @property
    def mean(self) -> float:
        if self.kind == "constant":
            return float(self.d)
        if self.kind == "poisson":
            return self.mu
        p = np.asarray(self.pmf)
        return float(np.dot(np.arange(p.size), p))

    @property
    def is_degenerate(self) -> bool:
        lo, hi = self.support()
        return hi is not None and lo == hi

    def support(self) -> tuple[int, Optional[int]]:
        """(min, max) of the support; max is None for unbounded support."""
        if self.kind == "constant":
            return self.d, self.d
        if self.kind == "poisson":
            return 0, None
        nz = np.flatnonzero(np.asarray(self.pmf) > 0)
        return int(nz[0]), int(nz[-1])

    def prob(self, k: int) -> float:
        if k < 0:
            return 0.0
        if self.kind == "constant":
            return 1.0 if k == self.d else 0.0
        if self.kind == "poisson":
            return math.exp(k * math.log(self.mu) - self.mu - math.lgamma(k + 1))
        return self.pmf[k] if k < len(self.pmf) else 0.0

    def prob_zero(self) -> float:
        return self.prob(0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, self.d, dtype=np.int64)
        if self.kind == "poisson":
            return rng.poisson(self.mu, size=size).astype(np.int64)
        p = np.asarray(self.pmf)
        return rng.choice(p.size, size=size, p=p / p.sum()).astype(np.int64)

    def label(self) -> str:
        if self.kind == "constant":
            return f"constant:{self.d}"
        if self.kind == "poisson":
            return f"poisson:{self.mu:g}"
        return "empirical:" + ",".join(f"{k}={p:g}" for k, p in enumerate(self.pmf) if p > 0)


def _read_pmf_file(path: Path) -> dict[int, float]:
    items: dict[int, float] = {}
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ParameterError(f"{path}: expected 'k probability', got {raw!r}")
        items[int(parts[0])] = items.get(int(parts[0]), 0.0) + float(parts[1])
    if not items:
        raise ParameterError(f"{path}: empty pmf file")
    return items


# ---------------------------------------------------------------------------
# Graph


@dataclass(frozen=True, eq=False)
class Graph:
    n_nodes: int
    u: np.ndarray
    v: np.ndarray
    mult: np.ndarray
    # stubs dropped by the configuration model (self-loops and parity leftover)
    discarded_stubs: int = 0

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ParameterError(f"graph needs at least one node, got {self.n_nodes}")
        u = np.asarray(self.u, dtype=np.int64)
        v = np.asarray(self.v, dtype=np.int64)
        m = np.asarray(self.mult, dtype=np.int64)
        if not (u.shape == v.shape == m.shape and u.ndim == 1):
            raise ParameterError("edge arrays must be one-dimensional and equally long")
        if u.size:
            if np.any(u >= v):
                raise ParameterError("edges must be stored with u < v (no self-loops)")
            if u.min() < 0 or v.max() >= self.n_nodes:
                raise ParameterError("edge endpoint outside [0, n_nodes)")
            if np.any(m < 1):
                raise ParameterError("edge multiplicities must be >= 1")
            keys = u * self.n_nodes + v
            if np.any(np.diff(keys) <= 0):
                raise ParameterError("edges must be sorted and unique")
        for arr in (u, v, m):
            arr.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "mult", m)

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[tuple[int, ...]], discarded_stubs: int = 0) -> "Graph":
        """Build from (u, v) or (u, v, multiplicity) tuples; repeats add up."""
        acc: dict[tuple[int, int], int] = {}
        for e in edges:
            a, b = int(e[0]), int(e[1])
            m = int(e[2]) if len(e) > 2 else 1
            if a == b:
                raise ParameterError(f"self-loop at node {a} is not allowed")
            if not (0 <= a < n_nodes and 0 <= b < n_nodes):
                raise ParameterError(f"edge ({a}, {b}) outside [0, {n_nodes})")
            key = (a, b) if a < b else (b, a)
            acc[key] = acc.get(key, 0) + m
        keys = sorted(acc)
        u = np.array([k[0] for k in keys], dtype=np.int64)
        v = np.array([k[1] for k in keys], dtype=np.int64)
        m = np.array([acc[k] for k in keys], dtype=np.int64)
        return cls(n_nodes=n_nodes, u=u, v=v, mult=m, discarded_stubs=discarded_stubs)

    @classmethod
    def _from_pairs(cls, n_nodes: int, a: np.ndarray, b: np.ndarray, discarded_stubs: int = 0) -> "Graph":
        lo = np.minimum(a, b).astype(np.int64)
        hi = np.maximum(a, b).astype(np.int64)
        keys, counts = np.unique(lo * n_nodes + hi, return_counts=True)
        return cls(
            n_nodes=n_nodes,
            u=keys // n_nodes,
            v=keys % n_nodes,
            mult=counts.astype(np.int64),
            discarded_stubs=discarded_stubs,
        )

    @classmethod
    def complete(cls, n: int) -> "Graph":
        iu, iv = np.triu_indices(n, k=1)
        return cls(n_nodes=n, u=iu, v=iv, mult=np.ones(iu.size, dtype=np.int64))

    @cached_property
    def adjacency(self) -> dict[tuple[int, int], int]:
        """Symmetric multiplicity map: both (u, v) and (v, u) are present."""
        adj: dict[tuple[int, int], int] = {}
        for a, b, m in zip(self.u.tolist(), self.v.tolist(), self.mult.tolist()):
            adj[(a, b)] = m
            adj[(b, a)] = m
        return adj

    @property
    def degree_sum(self) -> int:
        return 2 * int(self.mult.sum())

    def edge_count(self) -> int:
        return int(self.mult.sum())

    def degrees(self) -> np.ndarray:
        d = np.bincount(self.u, weights=self.mult, minlength=self.n_nodes)
        d += np.bincount(self.v, weights=self.mult, minlength=self.n_nodes)
        return d.astype(np.int64)

    @cached_property
    def _pair_keys(self) -> np.ndarray:
        return self.u * self.n_nodes + self.v

    def to_csr(self) -> sparse.csr_matrix:
        n = self.n_nodes
        rows = np.concatenate([self.u, self.v])
        cols = np.concatenate([self.v, self.u])
        data = np.concatenate([self.mult, self.mult])
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=np.int64)

    def to_networkx(self) -> nx.MultiGraph:
        mg = nx.MultiGraph()
        mg.add_nodes_from(range(self.n_nodes))
        for a, b, m in zip(self.u.tolist(), self.v.tolist(), self.mult.tolist()):
            mg.add_edges_from([(a, b)] * m)
        return mg

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n_nodes == other.n_nodes
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.mult, other.mult)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class CutQuery:
    subset: frozenset[int]

    @classmethod
    def of(cls, nodes: Iterable[int]) -> "CutQuery":
        return cls(subset=frozenset(int(x) for x in nodes))

    @property
    def size(self) -> int:
        return len(self.subset)

    def indicator(self, n_nodes: int) -> np.ndarray:
        if not self.subset:
            raise ParameterError("cut subset must be nonempty")
        if len(self.subset) >= n_nodes:
            raise ParameterError("cut subset must be a proper subset of the nodes")
        idx = np.fromiter(self.subset, dtype=np.int64)
        if idx.min() < 0 or idx.max() >= n_nodes:
            raise ParameterError(f"cut subset has nodes outside [0, {n_nodes})")
        ind = np.zeros(n_nodes, dtype=bool)
        ind[idx] = True
        return ind


# ---------------------------------------------------------------------------
# Generators


def gen_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"p must be in [0, 1], got {p}")
    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    # one stream per row keeps rows independent of evaluation order
    for i in range(n - 1):
        hits = np.flatnonzero(stream(seed, "erdos-renyi", i).random(n - 1 - i) < p)
        if hits.size:
            us.append(np.full(hits.size, i, dtype=np.int64))
            vs.append(hits + i + 1)
    u = np.concatenate(us) if us else np.empty(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.empty(0, dtype=np.int64)
    log.debug("ER(%s, %s) seed=%s -> %s edges", n, p, seed, u.size)
    return Graph(n_nodes=n, u=u, v=v, mult=np.ones(u.size, dtype=np.int64))


def gen_configuration(n: int, dist: DegreeDistribution, seed: int) -> Graph:
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    degrees = dist.sample(stream(seed, "configuration-degrees"), n)
    stubs = np.repeat(np.arange(n, dtype=np.int64), degrees)
    stubs = stream(seed, "configuration-pairing").permutation(stubs)
    discarded = 0
    if stubs.size % 2 == 1:
        # last stub of a uniform shuffle is a uniformly chosen leftover
        stubs = stubs[:-1]
        discarded += 1
    a, b = stubs[0::2], stubs[1::2]
    loops = a == b
    discarded += 2 * int(loops.sum())
    g = Graph._from_pairs(n, a[~loops], b[~loops], discarded_stubs=discarded)
    log.debug("configuration(%s, %s) seed=%s -> %s edges, %s stubs discarded", n, dist.label(), seed, g.edge_count(), discarded)
    return g


# ---------------------------------------------------------------------------
# Cuts


def cut_size(g: Graph, q: CutQuery) -> int:
    ind = q.indicator(g.n_nodes)
    crossing = ind[g.u] != ind[g.v]
    return int(g.mult[crossing].sum())


def _cuts_of_rows(g: Graph, rows: np.ndarray, degrees: np.ndarray) -> np.ndarray:
    """L_S for each row of node indices (one subset per row, rows sorted)."""
    k = rows.shape[1]
    out_deg = degrees[rows].sum(axis=1)
    if k < 2 or g.u.size == 0:
        return out_deg
    ia, ib = np.triu_indices(k, k=1)
    keys = rows[:, ia] * g.n_nodes + rows[:, ib]
    pair_keys = g._pair_keys
    pos = np.searchsorted(pair_keys, keys)
    pos_c = np.minimum(pos, pair_keys.size - 1)
    hit = pair_keys[pos_c] == keys
    internal = np.where(hit, g.mult[pos_c], 0).sum(axis=1)
    return out_deg - 2 * internal


def _check_k(g: Graph, k: int) -> None:
    if not (1 <= k < g.n_nodes):
        raise ParameterError(f"subset size k must satisfy 1 <= k < n={g.n_nodes}, got {k}")


def min_cut_over_size(g: Graph, k: int, cap: Optional[int] = None) -> tuple[int, frozenset[int]]:
    """Exact minimum of L_S over all |S| = k, with the first minimiser found."""
    _check_k(g, k)
    cap = get_settings().enumeration_cap if cap is None else cap
    n = g.n_nodes
    # L_S = L_{S^c}: enumerate the smaller side
    kk = min(k, n - k)
    required = math.comb(n, kk)
    if required > cap:
        raise BudgetExceededError(required, cap)

    degrees = g.degrees()
    pairs = max(1, kk * (kk - 1) // 2)
    chunk = max(1, _CHUNK_CELLS // pairs)
    combos = itertools.combinations(range(n), kk)
    best_val: Optional[int] = None
    best_row: Optional[np.ndarray] = None
    while True:
        flat = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, chunk)), dtype=np.int64)
        if flat.size == 0:
            break
        rows = flat.reshape(-1, kk)
        cuts = _cuts_of_rows(g, rows, degrees)
        i = int(np.argmin(cuts))
        if best_val is None or cuts[i] < best_val:
            best_val = int(cuts[i])
            best_row = rows[i].copy()
            if best_val == 0:
                break
    assert best_val is not None and best_row is not None
    witness = frozenset(best_row.tolist())
    if kk != k:
        witness = frozenset(range(n)) - witness
    return best_val, witness


def sampled_min_cut_with_witness(g: Graph, k: int, samples: int, seed: int) -> tuple[int, frozenset[int]]:
    _check_k(g, k)
    if samples < 1:
        raise ParameterError(f"samples must be >= 1, got {samples}")
    n = g.n_nodes
    degrees = g.degrees()
    pairs = max(1, k * (k - 1) // 2)
    chunk = max(1, min(samples, _CHUNK_CELLS // max(pairs, n)))
    rng = stream(seed, "sampled-cut", k)
    best_val: Optional[int] = None
    best_row: Optional[np.ndarray] = None
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        keys = rng.random((m, n))
        rows = np.sort(np.argpartition(keys, k - 1, axis=1)[:, :k], axis=1)
        cuts = _cuts_of_rows(g, rows, degrees)
        i = int(np.argmin(cuts))
        if best_val is None or cuts[i] < best_val:
            best_val = int(cuts[i])
            best_row = rows[i].copy()
        done += m
    assert best_val is not None and best_row is not None
    return best_val, frozenset(best_row.tolist())


def sampled_min_cut(g: Graph, k: int, samples: int, seed: int) -> int:
    """Minimum L_S over uniformly sampled k-subsets; an upper bound on the true minimum."""
    return sampled_min_cut_with_witness(g, k, samples, seed)[0]


def min_cuts_by_size(g: Graph, k_lo: int, k_hi: int, cap: Optional[int] = None) -> dict[int, int]:
    """Exact per-k minimum cuts for k_lo <= k <= k_hi (M_k for the proposition bound)."""
    return {k: min_cut_over_size(g, k, cap=cap)[0] for k in range(k_lo, k_hi + 1)}


# ---------------------------------------------------------------------------
# Uniform lower-bound verification


@dataclass(frozen=True)
class CutCheck:
    k: int
    status: Literal["ok", "violation", "inconclusive"]
    bound: float
    min_cut: Optional[int]
    witness: Optional[frozenset[int]]
    exact: bool
    note: str = ""


@dataclass(frozen=True)
class BoundVerification:
    checks: tuple[CutCheck, ...] = field(default_factory=tuple)

    @property
    def violations(self) -> list[CutCheck]:
        return [c for c in self.checks if c.status == "violation"]

    @property
    def inconclusive(self) -> list[CutCheck]:
        return [c for c in self.checks if c.status == "inconclusive"]

    @property
    def conclusive(self) -> bool:
        return not self.inconclusive


def _below(value: float, bound: float) -> bool:
    return value < bound - 1e-9 * max(1.0, abs(bound))


def verify_uniform_bound(
    g: Graph,
    k_lo: int,
    k_hi: int,
    bound: Callable[[int], float],
    *,
    cap: Optional[int] = None,
    samples: Optional[int] = None,
    seed: int = 0,
) -> BoundVerification:
    """Check min_{|S|=k} L_S >= bound(k) for every k in [k_lo, k_hi].

    Exact enumeration is used within the budget. Beyond it the minimum is
    sampled: a sampled set below the bound is a genuine violation, otherwise
    the k is reported as inconclusive. One failing k never stops the others.
    """
    if not (1 <= k_lo <= k_hi < g.n_nodes):
        raise ParameterError(f"need 1 <= k_lo <= k_hi < n, got [{k_lo}, {k_hi}] with n={g.n_nodes}")
    settings = get_settings()
    samples = settings.sample_fallback if samples is None else samples

    checks: list[CutCheck] = []
    for k in range(k_lo, k_hi + 1):
        b = math.nan
        try:
            b = float(bound(k))
            value, witness = min_cut_over_size(g, k, cap=cap)
            status = "violation" if _below(value, b) else "ok"
            checks.append(CutCheck(k, status, b, value, witness, True))
        except BudgetExceededError as e:
            log.warning("k=%s: %s; sampling %s subsets instead", k, e, samples)
            value, witness = sampled_min_cut_with_witness(g, k, samples, seed)
            if _below(value, b):
                checks.append(CutCheck(k, "violation", b, value, witness, False, "sampled witness"))
            else:
                checks.append(CutCheck(k, "inconclusive", b, value, None, False, f"budget refused ({e.required} subsets)"))
        except Exception as e:
            log.exception("k=%s: cut check failed", k)
            checks.append(CutCheck(k, "inconclusive", b, None, None, False, f"error: {e}"))
    return BoundVerification(checks=tuple(checks))
