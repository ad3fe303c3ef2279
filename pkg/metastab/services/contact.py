"""Contact process (SIS) simulation on a multigraph.

Infected nodes heal at rate 1; a healthy node j is infected at rate
tau * sum_{i infected} A_ij. Events are drawn with the direct Gillespie method:
total rate |I| + tau * W where W is the integer infection pressure summed over
healthy nodes. Healing picks uniformly from a list/position map; infection
walks a sum-tree of integer pressures, so the bookkeeping never drifts.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel

from ..core.config import get_settings
from ..core.errors import BookkeepingError, NoUncensoredSamplesError, ParameterError
from ..core.rng import stream
from .graph import Graph

log = logging.getLogger("metastab.contact")

_UNIFORM_BLOCK = 4096


@dataclass(frozen=True)
class ContactConfig:
    tau: float
    initial: Union[Literal["all"], frozenset[int]] = "all"
    # censoring horizon; None runs until extinction
    t_max: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ParameterError(f"tau must be finite and >= 0, got {self.tau!r}")
        if self.t_max is not None and not self.t_max > 0:
            raise ParameterError(f"t_max must be positive, got {self.t_max!r}")
        if self.initial != "all":
            nodes = frozenset(int(x) for x in self.initial)
            if not nodes:
                raise ParameterError("initial infected set must be nonempty")
            object.__setattr__(self, "initial", nodes)

    def initial_nodes(self, n_nodes: int) -> np.ndarray:
        if self.initial == "all":
            return np.arange(n_nodes, dtype=np.int64)
        nodes = np.array(sorted(self.initial), dtype=np.int64)
        if nodes[0] < 0 or nodes[-1] >= n_nodes:
            raise ParameterError(f"initial nodes outside [0, {n_nodes})")
        return nodes


@dataclass(frozen=True)
class ExtinctionSample:
    time: float
    censored: bool
    peak_infected: int
    events: int
    index: int = 0
    # per infected-count transition counts, only with track_jumps
    up_jumps: Optional[tuple[int, ...]] = field(default=None, repr=False)
    down_jumps: Optional[tuple[int, ...]] = field(default=None, repr=False)


class ExtinctionEstimate(BaseModel):
    reps: int
    uncensored: int
    censored_count: int
    mean: Optional[float] = None
    stderr: Optional[float] = None
    # E[min(T, t_max)], a lower estimate of E[T] that counts censored runs at t_max
    restricted_mean: float
    restricted_stderr: Optional[float] = None
    tau: float
    t_max: Optional[float] = None
    seed: int


# ---------------------------------------------------------------------------
# Bookkeeping structures


class SumTree:
    """Integer sum-tree over n leaves (root at index 1, leaves at cap + i)."""

    def __init__(self, n: int, ancestors: Optional[np.ndarray] = None):
        self.n = n
        self.cap = 1 << max(0, (n - 1).bit_length())
        self.depth = self.cap.bit_length() - 1
        self.tree = np.zeros(2 * self.cap, dtype=np.int64)
        self._anc = ancestors if ancestors is not None else self.ancestor_table(n)

    @staticmethod
    def ancestor_table(n: int) -> np.ndarray:
        """Row i lists leaf i and every ancestor up to the root."""
        cap = 1 << max(0, (n - 1).bit_length())
        depth = cap.bit_length() - 1
        leaves = cap + np.arange(n, dtype=np.int64)
        return leaves[:, None] >> np.arange(depth + 1, dtype=np.int64)[None, :]

    @property
    def total(self) -> int:
        return int(self.tree[1])

    def weight(self, i: int) -> int:
        return int(self.tree[self.cap + i])

    def weights(self) -> np.ndarray:
        return self.tree[self.cap : self.cap + self.n]

    def add(self, idx: np.ndarray, delta: np.ndarray) -> None:
        np.add.at(self.tree, self._anc[idx].ravel(), np.repeat(delta, self.depth + 1))

    def find(self, r: int) -> int:
        """Leaf whose cumulative weight interval contains r, 0 <= r < total."""
        node = 1
        tree = self.tree
        cap = self.cap
        while node < cap:
            left = 2 * node
            w = tree[left]
            if r < w:
                node = left
            else:
                r -= w
                node = left + 1
        return node - cap

    def consistent(self) -> bool:
        t = self.tree
        return bool(np.array_equal(t[1 : self.cap], t[2 : 2 * self.cap : 2] + t[3 : 2 * self.cap : 2])) if self.cap > 1 else True


class _IndexedSet:
    """Set with O(1) add, remove and uniform choice by position."""

    def __init__(self, items: Iterable[int] = ()):
        self.items: list[int] = []
        self.position: dict[int, int] = {}
        for x in items:
            self.add(x)

    def __len__(self) -> int:
        return len(self.items)

    def add(self, item: int) -> None:
        if item in self.position:
            return
        self.position[item] = len(self.items)
        self.items.append(item)

    def remove(self, item: int) -> None:
        pos = self.position.pop(item)
        last = self.items.pop()
        if pos != len(self.items):
            self.items[pos] = last
            self.position[last] = pos


@dataclass(frozen=True, eq=False)
class _Network:
    n: int
    indptr: np.ndarray
    indices: np.ndarray
    mult: np.ndarray
    ancestors: np.ndarray

    @classmethod
    def of(cls, g: Graph) -> "_Network":
        csr = g.to_csr()
        return cls(
            n=g.n_nodes,
            indptr=csr.indptr.astype(np.int64),
            indices=csr.indices.astype(np.int64),
            mult=csr.data.astype(np.int64),
            ancestors=SumTree.ancestor_table(g.n_nodes),
        )

    def neighbours(self, x: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[x], self.indptr[x + 1]
        return self.indices[lo:hi], self.mult[lo:hi]


class _Run:
    """One sample path. Mutable, single-threaded."""

    def __init__(self, net: _Network, cfg: ContactConfig, index: int, track_jumps: bool, audit_interval: Optional[int]):
        self.net = net
        self.tau = cfg.tau
        self.t_max = cfg.t_max
        self.rng = stream(cfg.seed, "contact", index)
        self.audit_interval = audit_interval

        n = net.n
        start = cfg.initial_nodes(n)
        self.infected_mask = np.zeros(n, dtype=bool)
        self.infected_mask[start] = True
        self.infected = _IndexedSet(start.tolist())
        # pressure[v] = sum over infected i of A_iv, for every node v
        self.pressure = self._pressure_from_scratch()
        self.tree = SumTree(n, net.ancestors)
        healthy = np.flatnonzero(~self.infected_mask)
        if healthy.size:
            self.tree.add(healthy, self.pressure[healthy])

        self.time = 0.0
        self.events = 0
        self.peak = len(self.infected)
        self.up = np.zeros(n + 1, dtype=np.int64) if track_jumps else None
        self.down = np.zeros(n + 1, dtype=np.int64) if track_jumps else None
        self._u = self.rng.random(_UNIFORM_BLOCK)
        self._ui = 0

    def _uniform(self) -> float:
        if self._ui == _UNIFORM_BLOCK:
            self._u = self.rng.random(_UNIFORM_BLOCK)
            self._ui = 0
        u = self._u[self._ui]
        self._ui += 1
        return float(u)

    def _pressure_from_scratch(self) -> np.ndarray:
        net = self.net
        rows = np.repeat(np.arange(net.n), np.diff(net.indptr))
        contrib = np.where(self.infected_mask[rows], net.mult, 0)
        return np.bincount(net.indices, weights=contrib, minlength=net.n).astype(np.int64)

    @property
    def rate(self) -> float:
        return len(self.infected) + self.tau * self.tree.total

    def next_time(self) -> float:
        """Time of the next event (inf once extinct)."""
        rate = self.rate
        if rate <= 0.0:
            return math.inf
        return self.time - math.log1p(-self._uniform()) / rate

    def apply(self, t: float) -> None:
        n_inf = len(self.infected)
        u = self._uniform() * (n_inf + self.tau * self.tree.total)
        self.time = t
        self.events += 1
        if u < n_inf:
            if self.down is not None:
                self.down[n_inf] += 1
            self._heal(self.infected.items[int(u)])
        else:
            if self.up is not None:
                self.up[n_inf] += 1
            total = self.tree.total
            r = min(int((u - n_inf) / self.tau), total - 1)
            self._infect(self.tree.find(r))
            self.peak = max(self.peak, n_inf + 1)
        if self.audit_interval and self.events % self.audit_interval == 0:
            self.audit()

    def _infect(self, x: int) -> None:
        nb, m = self.net.neighbours(x)
        self.infected.add(x)
        self.infected_mask[x] = True
        self.pressure[nb] += m
        healthy = ~self.infected_mask[nb]
        idx = np.concatenate([[x], nb[healthy]])
        delta = np.concatenate([[-self.tree.weight(x)], m[healthy]])
        self.tree.add(idx, delta)

    def _heal(self, x: int) -> None:
        nb, m = self.net.neighbours(x)
        self.infected.remove(x)
        self.infected_mask[x] = False
        self.pressure[nb] -= m
        healthy = ~self.infected_mask[nb]
        idx = np.concatenate([[x], nb[healthy]])
        delta = np.concatenate([[self.pressure[x]], -m[healthy]])
        self.tree.add(idx, delta)

    def audit(self) -> None:
        expected = self._pressure_from_scratch()
        if not np.array_equal(expected, self.pressure):
            raise BookkeepingError(f"pressure drift after {self.events} events")
        leaves = np.where(self.infected_mask, 0, expected)
        if not np.array_equal(leaves, self.tree.weights()) or not self.tree.consistent():
            raise BookkeepingError(f"sum-tree disagrees with pressures after {self.events} events")
        if sorted(self.infected.items) != np.flatnonzero(self.infected_mask).tolist():
            raise BookkeepingError(f"infected list disagrees with mask after {self.events} events")

    def run(self) -> bool:
        """Advance to extinction or t_max; True when censored."""
        while self.infected:
            t = self.next_time()
            if self.t_max is not None and t > self.t_max:
                self.time = self.t_max
                return True
            self.apply(t)
        return False


def _audit_interval(audit_interval: Optional[int]) -> Optional[int]:
    if audit_interval is not None:
        return audit_interval if audit_interval > 0 else None
    settings = get_settings()
    return settings.audit_interval if settings.debug else None


# ---------------------------------------------------------------------------
# Public operations


def _simulate(net: _Network, cfg: ContactConfig, index: int, track_jumps: bool, audit_interval: Optional[int]) -> ExtinctionSample:
    run = _Run(net, cfg, index, track_jumps, audit_interval)
    censored = run.run()
    if audit_interval:
        run.audit()
    return ExtinctionSample(
        time=run.time,
        censored=censored,
        peak_infected=run.peak,
        events=run.events,
        index=index,
        up_jumps=tuple(run.up.tolist()) if run.up is not None else None,
        down_jumps=tuple(run.down.tolist()) if run.down is not None else None,
    )


def simulate_extinction(
    g: Graph,
    cfg: ContactConfig,
    *,
    index: int = 0,
    track_jumps: bool = False,
    audit_interval: Optional[int] = None,
) -> ExtinctionSample:
    """One replication; ``index`` selects the random stream under ``cfg.seed``."""
    return _simulate(_Network.of(g), cfg, index, track_jumps, _audit_interval(audit_interval))


def _run_batch(args: tuple[_Network, ContactConfig, Sequence[int], bool, Optional[int]]) -> list[ExtinctionSample]:
    net, cfg, indices, track_jumps, audit_interval = args
    return [_simulate(net, cfg, i, track_jumps, audit_interval) for i in indices]


def run_replications(
    g: Graph,
    cfg: ContactConfig,
    reps: int,
    *,
    threads: Optional[int] = None,
    track_jumps: bool = False,
    audit_interval: Optional[int] = None,
) -> list[ExtinctionSample]:
    """``reps`` independent replications, returned in replication order."""
    if reps < 1:
        raise ParameterError(f"reps must be >= 1, got {reps}")
    workers = threads if threads else get_settings().resolved_threads()
    workers = max(1, min(workers, reps))
    net = _Network.of(g)
    audit_interval = _audit_interval(audit_interval)

    if workers == 1:
        return [_simulate(net, cfg, i, track_jumps, audit_interval) for i in range(reps)]

    chunk = max(1, math.ceil(reps / (4 * workers)))
    tasks = [(net, cfg, range(lo, min(reps, lo + chunk)), track_jumps, audit_interval) for lo in range(0, reps, chunk)]
    log.info("running %s replications on %s workers", reps, workers)
    samples: list[ExtinctionSample] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves task order, so the merge is independent of scheduling
        for batch in pool.map(_run_batch, tasks):
            samples.extend(batch)
    return samples


def _mean_and_stderr(values: Sequence[float]) -> tuple[float, Optional[float]]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, None
    var = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
    return mean, math.sqrt(var / n)


def summarize(samples: Sequence[ExtinctionSample], cfg: ContactConfig) -> ExtinctionEstimate:
    """Mean over uncensored runs; censored runs are counted, never averaged in."""
    ordered = sorted(samples, key=lambda s: s.index)
    times = [s.time for s in ordered if not s.censored]
    restricted_mean, restricted_stderr = _mean_and_stderr([s.time for s in ordered])
    estimate = ExtinctionEstimate(
        reps=len(ordered),
        uncensored=len(times),
        censored_count=len(ordered) - len(times),
        restricted_mean=restricted_mean,
        restricted_stderr=restricted_stderr,
        tau=cfg.tau,
        t_max=cfg.t_max,
        seed=cfg.seed,
    )
    if times:
        estimate.mean, estimate.stderr = _mean_and_stderr(times)
    if estimate.censored_count:
        log.warning("%s of %s replications censored at t_max=%s", estimate.censored_count, estimate.reps, cfg.t_max)
    return estimate


def estimate_mean_extinction(
    g: Graph,
    cfg: ContactConfig,
    reps: int,
    *,
    threads: Optional[int] = None,
    audit_interval: Optional[int] = None,
) -> ExtinctionEstimate:
    """Mean extinction time over ``reps`` replications.

    Raises NoUncensoredSamplesError when every run hit t_max; the error carries
    the estimate so the restricted mean is still available.
    """
    samples = run_replications(g, cfg, reps, threads=threads, audit_interval=audit_interval)
    estimate = summarize(samples, cfg)
    if estimate.uncensored == 0:
        raise NoUncensoredSamplesError(reps, cfg.t_max, estimate=estimate)
    return estimate


def infected_trajectory(g: Graph, cfg: ContactConfig, sample_times: Sequence[float], *, index: int = 0) -> list[int]:
    """|I_t| at each requested time along a single path."""
    times = np.asarray(sample_times, dtype=float)
    if times.size and (np.any(np.diff(times) < 0) or times[0] < 0):
        raise ParameterError("sample_times must be nonnegative and sorted ascending")
    run = _Run(_Network.of(g), cfg, index, False, _audit_interval(None))
    horizon = cfg.t_max if cfg.t_max is not None else math.inf
    out: list[int] = []
    i = 0
    while i < times.size:
        t_next = run.next_time()
        while i < times.size and times[i] < min(t_next, horizon):
            out.append(len(run.infected))
            i += 1
        if t_next > horizon or math.isinf(t_next):
            break
        run.apply(t_next)
    # past extinction (or the horizon) the count stays where it is
    out.extend([len(run.infected)] * (times.size - i))
    return out
