"""Erdős–Rényi thresholds and growth exponents.

Dense regime (Np -> inf): every set of size k has at least rho*p*k(N-k)
boundary edges w.h.p., which turns the cut-based extinction bound into
exp((1-eps) log(Np tau) N), or exp(((1-eps) log lam + 1/lam - 1) N) when
Np tau = lam is constant.

Sparse regime (Np = sigma > 4 log 2): the boundary fraction rho(gamma) depends
on the set fraction gamma and vanishes at gamma_sigma, 1 - gamma_sigma.
Everything here is closed-form double-precision arithmetic; integrals of log
use the antiderivative s log s - s.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Iterable, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.special import entr, rel_entr, xlogy

from ..core.errors import InapplicableError, ParameterError

log = logging.getLogger("metastab.bounds")

LOG2 = math.log(2.0)
SIGMA_MIN = 4.0 * LOG2


class BoundReport(BaseModel):
    kind: str
    inputs: dict[str, Any] = Field(default_factory=dict)
    threshold_tau: Optional[float] = None
    growth_exponent: Optional[float] = None
    feasible: bool = False
    notes: list[str] = Field(default_factory=list)
    terms: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _growth_needs_feasible(self) -> "BoundReport":
        if self.growth_exponent is not None and not self.feasible:
            raise ValueError("a growth exponent is only reported for feasible parameters")
        return self


# ---------------------------------------------------------------------------
# Primitives


def entropy(gamma):
    """H(gamma) = -gamma log gamma - (1-gamma) log(1-gamma); 0 at the endpoints."""
    g = np.asarray(gamma, dtype=float)
    if np.any((g < 0) | (g > 1)) or np.any(np.isnan(g)):
        raise ParameterError(f"entropy needs gamma in [0, 1], got {gamma!r}")
    h = entr(g) + entr(1.0 - g)
    return float(h) if h.ndim == 0 else h


def kl_bernoulli(q, p):
    """D(q || p) between Bernoulli(q) and Bernoulli(p)."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    d = rel_entr(q, p) + rel_entr(1.0 - q, 1.0 - p)
    return float(d) if d.ndim == 0 else d


def chernoff_rate(rho):
    """G(rho) = rho log rho + 1 - rho."""
    r = np.asarray(rho, dtype=float)
    g = xlogy(r, r) + 1.0 - r
    return float(g) if g.ndim == 0 else g


def _check_tail_args(n: int, p: float, rho: float) -> None:
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"p must be in [0, 1], got {p}")
    if not (0.0 < rho < 1.0):
        raise ParameterError(f"rho must be in (0, 1), got {rho}")


def chernoff_lower_tail(n: int, p: float, rho: float) -> float:
    """Bound on P(Bin(n, p) <= rho*n*p): exp(-n D(rho p || p))."""
    _check_tail_args(n, p, rho)
    return math.exp(-n * kl_bernoulli(rho * p, p))


def chernoff_lower_tail_dense(n: int, p: float, rho: float) -> float:
    """The simpler bound exp(-(1-rho)^2 n p / 2) on the same tail."""
    _check_tail_args(n, p, rho)
    return math.exp(-0.5 * (1.0 - rho) ** 2 * n * p)


def complete_graph_exponent(lam: float) -> float:
    """lim (1/N) log E[T_N] on K_N with tau = lam/N: log lam + 1/lam - 1."""
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    return math.log(lam) + 1.0 / lam - 1.0


# ---------------------------------------------------------------------------
# Dense regime


def dense_cut_failure_exponent(n: int, p: float, gamma: float, rho: float) -> float:
    """log of the union bound on P(some k-set, gamma N <= k <= (1-gamma) N, has L_S <= rho p k(N-k))."""
    if n < 1 or not (0 < gamma <= 0.5) or not (0 <= rho < 1) or not (0 <= p <= 1):
        raise ParameterError("need n >= 1, 0 < gamma <= 1/2, 0 <= rho < 1, 0 <= p <= 1")
    return math.log(n) + (LOG2 - 0.5 * (1.0 - rho) ** 2 * gamma * (1.0 - gamma) * p * n) * n


def dense_growth_exponent(
    n: int,
    p: float,
    tau: float,
    eps: float,
    regime: Literal["constant", "diverging"] = "constant",
) -> BoundReport:
    if n < 1 or not (0 < p <= 1) or not tau > 0:
        raise ParameterError("need n >= 1, 0 < p <= 1 and tau > 0")
    if not (0.0 <= eps < 1.0):
        raise ParameterError(f"eps must be in [0, 1), got {eps}")
    lam = n * p * tau
    diverging = (1.0 - eps) * math.log(lam)
    constant = diverging + 1.0 / lam - 1.0
    feasible = lam > 1.0
    report = BoundReport(
        kind="er-dense",
        inputs={"n": n, "p": p, "tau": tau, "eps": eps, "regime": regime},
        threshold_tau=1.0 / (n * p),
        feasible=feasible,
        terms={"lambda": lam, "diverging_exponent": diverging, "constant_exponent": constant},
    )
    if not feasible:
        report.notes.append("N p tau <= 1: the cut argument gives no exponential growth")
        return report
    report.growth_exponent = constant if regime == "constant" else diverging
    if report.growth_exponent <= 0:
        report.notes.append("exponent is not positive for this eps; lower eps or raise tau")
    return report


# ---------------------------------------------------------------------------
# Sparse regime


@dataclass(frozen=True)
class SparseParams:
    sigma: float
    zeta: float
    gamma_sigma: float
    alpha_sigma: float
    c: float
    gamma0: float

    def rho(self, gamma):
        """Guaranteed boundary fraction; 0 outside (gamma_sigma, 1 - gamma_sigma)."""
        g = np.asarray(gamma, dtype=float)
        base = g * (1.0 - g) - LOG2 / self.sigma
        inside = base > 0
        out = np.where(inside, np.power(np.where(inside, base, 1.0), self.alpha_sigma), 0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def degenerate(self) -> bool:
        # gamma0 collapsed onto 1/2: no interval left for the product bound
        return self.gamma0 >= 0.5


def sparse_params(sigma: float) -> SparseParams:
    if not sigma > SIGMA_MIN:
        raise InapplicableError(f"sparse bounds need sigma > 4 log 2 = {SIGMA_MIN:.6f}, got {sigma}")
    zeta = 0.25 - LOG2 / sigma
    gamma_sigma = 0.5 - math.sqrt(zeta)
    alpha = 2.0 * math.log(1.0 - 2.0 * math.sqrt(LOG2 / sigma)) / math.log(zeta)
    c = zeta ** math.sqrt(2.0 * alpha)
    gap = zeta - zeta ** math.sqrt(2.0 / alpha)
    gamma0 = 0.5 - math.sqrt(max(gap, 0.0))
    return SparseParams(sigma=sigma, zeta=zeta, gamma_sigma=gamma_sigma, alpha_sigma=alpha, c=c, gamma0=gamma0)


def sparse_lemma_exponent(sigma: float, gamma):
    """H(gamma) - sigma G(rho(gamma)) gamma(1-gamma); negative on (gamma_sigma, 1 - gamma_sigma)."""
    sp = sparse_params(sigma)
    g = np.asarray(gamma, dtype=float)
    val = entropy(g) - sigma * chernoff_rate(sp.rho(g)) * g * (1.0 - g)
    return float(val) if np.ndim(val) == 0 else val


def tau0_sparse(sigma: float) -> float:
    sp = sparse_params(sigma)
    if sp.degenerate:
        return math.inf
    return 1.0 / (sigma * sp.c * (1.0 - sp.gamma0))


def tau0_curve(sigmas: Iterable[float]) -> list[tuple[float, float, float]]:
    """(sigma, tau0, sigma * tau0) rows; sigma <= 4 log 2 rows carry inf."""
    rows = []
    for s in sigmas:
        try:
            t0 = tau0_sparse(s)
        except InapplicableError:
            t0 = math.inf
        rows.append((float(s), t0, s * t0))
    return rows


def _log_antiderivative(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return xlogy(s, s) - s


def _int_log(a: float, b: float) -> float:
    """Integral of log s over [a, b], 0 <= a <= b."""
    return float(_log_antiderivative(b) - _log_antiderivative(a))


def sparse_growth_exponent(sigma: float, tau: float, eps: float = 0.0) -> BoundReport:
    """Lower bound on lim (1/N) log E[T_N] for ER(N, sigma/N).

    The headline exponent is the integral of log(tau sigma rho(gamma)(1-gamma))
    over [gamma0, gamma1], which is positive because every integrand is. The
    ``conservative_exponent`` term replaces the (1-gamma) part with the integral
    of log s over [1-gamma1, 1].
    """
    inputs = {"sigma": sigma, "tau": tau, "eps": eps}
    if not tau > 0 or eps < 0:
        raise ParameterError("need tau > 0 and eps >= 0")
    try:
        sp = sparse_params(sigma)
    except InapplicableError as e:
        return BoundReport(kind="er-sparse", inputs=inputs, feasible=False, notes=[str(e)])
    t0 = tau0_sparse(sigma)
    terms: dict[str, Any] = {
        "zeta": sp.zeta,
        "gamma_sigma": sp.gamma_sigma,
        "alpha_sigma": sp.alpha_sigma,
        "c": sp.c,
        "gamma0": sp.gamma0,
    }
    report = BoundReport(kind="er-sparse", inputs=inputs, threshold_tau=t0, terms=terms)
    if not tau > t0:
        report.notes.append(f"tau <= tau0(sigma) = {t0:.6g}")
        return report

    ts = tau * sigma
    g0 = sp.gamma0
    g1 = min(1.0 - g0, 1.0 - 1.0 / (ts * sp.c))
    gs = sp.gamma_sigma
    log_ts = (g1 - g0) * math.log(ts)
    rho_part = sp.alpha_sigma * (_int_log(g0 - gs, g1 - gs) + _int_log(1.0 - g1 - gs, 1.0 - g0 - gs))
    healthy_tight = _int_log(1.0 - g1, 1.0 - g0)
    healthy_conservative = _int_log(1.0 - g1, 1.0)
    slack = eps / sigma

    report.feasible = True
    report.growth_exponent = log_ts + rho_part + healthy_tight - slack
    terms.update(
        {
            "gamma1": g1,
            "log_tau_sigma_term": log_ts,
            "rho_integral": rho_part,
            "healthy_integral": healthy_tight,
            "slack": -slack,
            "conservative_exponent": log_ts + rho_part + healthy_conservative - slack,
            "asymptotic_exponent": math.log(ts) + 1.0 / ts - 1.0,
        }
    )
    if g1 == 1.0 - g0:
        report.notes.append("gamma1 = 1 - gamma0 (tau large enough that the healthy fraction never binds)")
    log.debug("sparse exponent sigma=%s tau=%s -> %s", sigma, tau, report.growth_exponent)
    return report
