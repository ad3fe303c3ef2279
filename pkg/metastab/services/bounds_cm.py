"""Configuration-model bounds.

The probability that a set holding a fraction gamma of the nodes has fewer
than rho*N boundary links decays like exp(-N Psi(gamma, rho)), where

    Psi(gamma, rho) = inf_{a1, a2 >= 0} phi(a1, a2; rho)
                      + gamma R(a1 / gamma) + (1 - gamma) R(a2 / (1 - gamma))

and R is the Cramér rate function of the degree distribution. Sets of every
size in a range keep at least rho*N links w.h.p. once Psi > H (the entropy),
which feeds the cut-based extinction-time bound. mu0 is the best ratio
rho / gamma for which that holds; tau > 1 / mu0 gives exponential survival.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Iterable, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.special import logsumexp, xlogy

from ..core.cache import LRUCache
from ..core.config import get_settings
from ..core.errors import InapplicableError, ParameterError
from .bounds_er import LOG2, BoundReport, entropy
from .graph import DegreeDistribution
from .pairing import phi_values

log = logging.getLogger("metastab.bounds")

Method = Literal["auto", "numeric"]

# Psi - H must exceed this for a point to count as feasible
FEASIBILITY_MARGIN = 1e-9
# explicit Poisson branch needs mu > C4**2 = 8 log 2 / (2 - log 2)
C4 = math.sqrt(8.0 * LOG2 / (2.0 - LOG2))


# ---------------------------------------------------------------------------
# Cumulant generating function and rate function


def _support_logs(dist: DegreeDistribution) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(dist.pmf, dtype=float)
    ks = np.flatnonzero(p > 0)
    return ks.astype(float), np.log(p[ks])


def cgf(dist: DegreeDistribution, lam):
    """log E[exp(lam D)]."""
    l = np.asarray(lam, dtype=float)
    if dist.kind == "constant":
        out = l * dist.d
    elif dist.kind == "poisson":
        out = dist.mu * np.expm1(l)
    else:
        ks, logp = _support_logs(dist)
        out = logsumexp(logp[None, :] + l.reshape(-1, 1) * ks[None, :], axis=1).reshape(l.shape)
    return float(out) if np.ndim(out) == 0 else out


def _tilted_moments(dist: DegreeDistribution, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean, variance and cgf of D under the exponential tilt lam."""
    if dist.kind == "poisson":
        e = dist.mu * np.exp(lam)
        return e, e, dist.mu * np.expm1(lam)
    ks, logp = _support_logs(dist)
    w = logp[None, :] + lam[:, None] * ks[None, :]
    z = logsumexp(w, axis=1)
    p = np.exp(w - z[:, None])
    m = p @ ks
    v = np.sum(p * (ks[None, :] - m[:, None]) ** 2, axis=1)
    return m, v, z


def _solve_tilt(dist: DegreeDistribution, x: np.ndarray) -> np.ndarray:
    """lam with cgf'(lam) = x for x strictly inside the support hull (safeguarded Newton)."""
    lo = np.full(x.size, -1.0)
    hi = np.full(x.size, 1.0)
    for _ in range(64):
        need = _tilted_moments(dist, lo)[0] > x
        if not need.any():
            break
        lo[need] *= 2.0
    for _ in range(64):
        need = _tilted_moments(dist, hi)[0] < x
        if not need.any():
            break
        hi[need] *= 2.0

    lam = np.zeros(x.size)
    tol = 1e-14 * np.maximum(1.0, np.abs(x))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(200):
            m, v, _ = _tilted_moments(dist, lam)
            f = m - x
            done = np.abs(f) <= tol
            if done.all():
                break
            lo = np.where(f < 0, lam, lo)
            hi = np.where(f > 0, lam, hi)
            newton = lam - f / v
            ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
            lam = np.where(done, lam, np.where(ok, newton, 0.5 * (lo + hi)))
            if np.all(done | (hi - lo <= 4e-16 * np.maximum(1.0, np.abs(lam)))):
                break
    return lam


def poisson_rate_closed_form(mu: float, x):
    """x log(x / mu) - x + mu for x >= 0, inf for x < 0."""
    xs = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(xs < 0, np.inf, xlogy(xs, np.where(xs > 0, xs, 1.0) / mu) - xs + mu)
    return float(out) if out.ndim == 0 else out


class RateFunction:
    """R(x) = sup_lam (lam x - cgf(lam)) with its maximiser lam*(x) = R'(x).

    ``method="auto"`` uses closed forms (constant, Poisson); ``"numeric"``
    always goes through the Legendre transform. At a support extreme R(x) is
    -log P(D = x), its limit from inside; outside the support hull it is inf.
    Evaluations are memoised in a thread-safe LRU cache.
    """

    def __init__(self, dist: DegreeDistribution, method: Method = "auto", maxsize: int = 4096):
        if method not in ("auto", "numeric"):
            raise ParameterError(f"unknown method {method!r}")
        self.dist = dist
        self.method = method
        lo, hi = dist.support()
        self.lo = float(lo)
        self.hi = float(hi) if hi is not None else math.inf
        self._cache = LRUCache(maxsize=maxsize)

    def __call__(self, x: float) -> float:
        return float(self.evaluate([x])[0][0])

    def derivative(self, x: float) -> float:
        return float(self.evaluate([x])[1][0])

    def evaluate(self, xs) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_1d(np.asarray(xs, dtype=float))
        R = np.empty(x.size)
        lam = np.empty(x.size)
        missing = []
        for i, v in enumerate(x.tolist()):
            hit = self._cache.get(v)
            if hit is None:
                missing.append(i)
            else:
                R[i], lam[i] = hit
        if missing:
            idx = np.asarray(missing)
            r, l = self._compute(x[idx])
            R[idx] = r
            lam[idx] = l
            for v, rv, lv in zip(x[idx].tolist(), r.tolist(), l.tolist()):
                self._cache.set(v, (rv, lv))
        return R, lam

    def _compute(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        dist = self.dist
        R = np.full(x.size, np.inf)
        lam = np.where(x < dist.mean, -np.inf, np.inf)
        if dist.is_degenerate:
            at = np.abs(x - self.lo) <= 1e-12 * max(1.0, self.lo)
            R[at] = 0.0
            lam[at] = 0.0
            return R, lam
        if self.method == "auto" and dist.kind == "poisson":
            pos = x > 0
            R = poisson_rate_closed_form(dist.mu, x)
            lam[pos] = np.log(x[pos] / dist.mu)
            return np.atleast_1d(R), lam

        at_lo = x == self.lo
        at_hi = x == self.hi
        R[at_lo] = -math.log(dist.prob(int(self.lo)))
        if math.isfinite(self.hi):
            R[at_hi] = -math.log(dist.prob(int(self.hi)))
        inner = (x > self.lo) & (x < self.hi)
        if inner.any():
            l = _solve_tilt(dist, x[inner])
            c = _tilted_moments(dist, l)[2]
            R[inner] = np.maximum(l * x[inner] - c, 0.0)
            lam[inner] = l
        return R, lam


_RATE_FUNCTIONS = LRUCache(maxsize=64)


def get_rate_function(dist: DegreeDistribution, method: Method = "auto") -> RateFunction:
    return _RATE_FUNCTIONS.get_or_create((dist, method), lambda: RateFunction(dist, method))


def rate_function(dist: DegreeDistribution, x: float, method: Method = "auto") -> float:
    if x < 0:
        return math.inf
    return get_rate_function(dist, method)(x)


# ---------------------------------------------------------------------------
# Psi


class PsiQuery(BaseModel):
    gamma: float = Field(gt=0.0, lt=1.0)
    rho: Optional[float] = Field(default=None, ge=0.0)
    # rho = lambda_frac * gamma (1 - gamma) E[D]
    lambda_frac: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _one_rho(self) -> "PsiQuery":
        if self.rho is not None and self.lambda_frac is not None:
            raise ValueError("give rho or lambda_frac, not both")
        return self

    def resolved_rho(self, mean: float) -> float:
        if self.lambda_frac is not None:
            return self.lambda_frac * self.gamma * (1.0 - self.gamma) * mean
        return self.rho or 0.0


@dataclass(frozen=True)
class PsiResult:
    value: float
    a1: float
    a2: float
    degenerate: bool = False
    method: str = "numeric"
    note: str = ""

    @property
    def argmin(self) -> tuple[float, float]:
        return self.a1, self.a2


def _phi_gradient(a1: float, a2: float, rho: float) -> np.ndarray:
    if a1 * a2 < rho * (a1 + a2):
        return np.zeros(2)
    with np.errstate(divide="ignore", invalid="ignore"):
        half_log_s = 0.5 * math.log(a1 + a2) if a1 + a2 > 0 else -math.inf
        g1 = half_log_s + 0.5 * np.log(a1 - rho) - np.log(a1)
        g2 = half_log_s + 0.5 * np.log(a2 - rho) - np.log(a2)
    return np.array([g1, g2], dtype=float)


def _seed_axis(lo: float, upper: float, size: int) -> np.ndarray:
    if lo > 0:
        return np.geomspace(lo, upper, size)
    return np.concatenate([[0.0], np.geomspace(upper * 1e-4, upper, size - 1)])


def _coordinate_polish(f, x: np.ndarray, bounds, best: float, sweeps: int = 60) -> tuple[np.ndarray, float]:
    x = x.copy()
    for _ in range(sweeps):
        previous = best
        for axis in (0, 1):
            lo, hi = bounds[axis]
            if hi <= lo:
                continue

            def along(t: float, axis: int = axis) -> float:
                y = x.copy()
                y[axis] = t
                return f(y)

            res = minimize_scalar(along, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            if res.fun < best:
                best = float(res.fun)
                x[axis] = res.x
        if previous - best <= 1e-15 * max(1.0, abs(best)):
            break
    return x, best


def _psi_numeric(dist: DegreeDistribution, gamma: float, rho: float, method: Method, grid: Optional[int]) -> PsiResult:
    rf = get_rate_function(dist, method)
    size = grid or get_settings().psi_grid
    mean = dist.mean
    lo, hi = dist.support()
    upper = float(hi) if hi is not None else 4.0 * mean
    u = _seed_axis(float(lo), upper, size)
    Ru, _ = rf.evaluate(u)
    A1 = gamma * u[:, None]
    A2 = (1.0 - gamma) * u[None, :]
    F = phi_values(A1, A2, rho) + gamma * Ru[:, None] + (1.0 - gamma) * Ru[None, :]
    i, j = np.unravel_index(int(np.argmin(F)), F.shape)
    x = np.array([A1[i, 0], A2[0, j]])
    best = float(F[i, j])
    bounds = [(gamma * lo, gamma * upper), ((1.0 - gamma) * lo, (1.0 - gamma) * upper)]

    def value_and_grad(a: np.ndarray) -> tuple[float, np.ndarray]:
        R, lam = rf.evaluate([a[0] / gamma, a[1] / (1.0 - gamma)])
        val = float(phi_values(a[0], a[1], rho)) + gamma * R[0] + (1.0 - gamma) * R[1]
        if not math.isfinite(val):
            return 1e300, np.zeros(2)
        grad = _phi_gradient(a[0], a[1], rho) + lam
        return val, np.nan_to_num(grad, nan=0.0, posinf=1e8, neginf=-1e8)

    res = minimize(
        value_and_grad,
        x,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"ftol": 1e-15, "gtol": 1e-10, "maxiter": 500},
    )
    if res.fun < best:
        x, best = np.asarray(res.x, dtype=float), float(res.fun)
    x, best = _coordinate_polish(lambda a: value_and_grad(a)[0], x, bounds, best)
    return PsiResult(value=max(best, 0.0), a1=float(x[0]), a2=float(x[1]), method="numeric")


def _psi(dist: DegreeDistribution, gamma: float, rho: float, method: Method = "auto", grid: Optional[int] = None) -> PsiResult:
    mean = dist.mean
    cap = gamma * (1.0 - gamma) * mean
    if rho >= cap:
        return PsiResult(
            value=0.0,
            a1=gamma * mean,
            a2=(1.0 - gamma) * mean,
            degenerate=True,
            method="boundary",
            note="rho >= gamma(1-gamma)E[D]: the typical stub counts already fall short",
        )
    if dist.is_degenerate:
        a1, a2 = gamma * mean, (1.0 - gamma) * mean
        return PsiResult(value=float(phi_values(a1, a2, rho)), a1=a1, a2=a2, method="direct")
    if method == "auto" and dist.kind == "poisson":
        a1, a2 = poisson_stationary_point(dist.mu, gamma, rho)
        value = poisson_psi_closed_form(dist.mu, gamma, rho / cap)
        return PsiResult(value=value, a1=a1, a2=a2, method="closed-form")
    return _psi_numeric(dist, gamma, rho, method, grid)


def psi(dist: DegreeDistribution, q: PsiQuery, method: Method = "auto", grid: Optional[int] = None) -> PsiResult:
    return _psi(dist, q.gamma, q.resolved_rho(dist.mean), method, grid)


def psi_ratio_sweep(dist: DegreeDistribution, gammas: Iterable[float], method: Method = "auto") -> list[tuple[float, float, float, float]]:
    """(gamma, Psi(gamma, 0), H(gamma), ratio) rows."""
    rows = []
    for g in gammas:
        value = _psi(dist, g, 0.0, method).value
        h = entropy(g)
        rows.append((float(g), value, h, value / h if h > 0 else math.inf))
    return rows


def psi_curve(dist: DegreeDistribution, gamma: float, lambda_fracs: Iterable[float], method: Method = "auto") -> list[tuple[float, float, float, float, float]]:
    """(lambda_frac, rho, Psi, H(gamma), Psi - H) rows at fixed gamma."""
    h = entropy(gamma)
    rows = []
    for lf in lambda_fracs:
        rho = lf * gamma * (1.0 - gamma) * dist.mean
        value = _psi(dist, gamma, rho, method).value
        rows.append((float(lf), rho, value, h, value - h))
    return rows


# ---------------------------------------------------------------------------
# Metastability condition and mu0


def metastability_condition(dist: DegreeDistribution, conditioned: bool = False) -> tuple[bool, float]:
    """(E[2^{-D/2}] < 1/2, E[2^{-D/2}]); ``conditioned`` uses D given D >= 1."""
    value = math.exp(cgf(dist, -0.5 * LOG2))
    if conditioned:
        p0 = dist.prob_zero()
        if p0 >= 1.0:
            raise InapplicableError("D is almost surely zero")
        value = (value - p0) / (1.0 - p0)
    return value < 0.5, value


def poisson_threshold(conditioned: bool = False) -> float:
    """Smallest Poisson mean meeting the metastability condition."""
    return brentq(
        lambda mu: metastability_condition(DegreeDistribution.poisson(mu), conditioned)[1] - 0.5,
        0.1,
        20.0,
        xtol=1e-14,
    )


def poisson_existence_condition(mu: float) -> bool:
    return math.expm1(mu) > 2.0 * math.expm1(mu / math.sqrt(2.0))


@dataclass(frozen=True)
class Mu0Estimate:
    value: float
    gamma: float
    lambda_frac: float
    gamma_min: float
    grid_resolution: int


def mu0_search(
    dist: DegreeDistribution,
    grid_resolution: int = 100,
    gamma_min: float = 1e-3,
    method: Method = "auto",
) -> Mu0Estimate:
    """Certified lower estimate of mu0 with the (gamma, lambda_frac) that attains it.

    gamma runs over a log-spaced grid on [gamma_min, 1/2]; at each gamma the
    largest lambda_frac with Psi - H > margin is bracketed by bisection, so
    every reported point has been checked feasible.
    """
    if grid_resolution < 100:
        raise ParameterError(f"grid_resolution must be >= 100, got {grid_resolution}")
    if not (0.0 < gamma_min < 0.5):
        raise ParameterError(f"gamma_min must be in (0, 1/2), got {gamma_min}")
    mean = dist.mean

    def margin(g: float, lf: float) -> float:
        return _psi(dist, g, lf * g * (1.0 - g) * mean, method).value - entropy(g)

    def best_lambda(g: float) -> Optional[float]:
        if margin(g, 0.0) <= FEASIBILITY_MARGIN:
            return None
        lo, hi = 0.0, 1.0
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if margin(g, mid) > FEASIBILITY_MARGIN:
                lo = mid
            else:
                hi = mid
        return lo

    gammas = np.geomspace(gamma_min, 0.5, grid_resolution)
    found: list[tuple[float, float, float]] = []
    for g in gammas.tolist():
        lf = best_lambda(g)
        if lf is not None:
            found.append((lf * (1.0 - g) * mean, g, lf))
    if not found:
        raise InapplicableError("Gamma is empty: Psi(gamma, 0) <= H(gamma) on the whole grid")

    best = max(found)
    k = int(np.searchsorted(gammas, best[1]))
    left = gammas[max(k - 1, 0)]
    right = gammas[min(k + 1, gammas.size - 1)]

    def neg_ratio(g: float) -> float:
        lf = best_lambda(g)
        return 0.0 if lf is None else -lf * (1.0 - g) * mean

    if right > left:
        res = minimize_scalar(neg_ratio, bounds=(left, right), method="bounded", options={"xatol": 1e-6 * left})
        g = float(res.x)
        lf = best_lambda(g)
        if lf is not None and lf * (1.0 - g) * mean > best[0]:
            best = (lf * (1.0 - g) * mean, g, lf)
    log.debug("mu0(%s) >= %s at gamma=%s", dist.label(), best[0], best[1])
    return Mu0Estimate(value=best[0], gamma=best[1], lambda_frac=best[2], gamma_min=gamma_min, grid_resolution=grid_resolution)


def mu0(dist: DegreeDistribution, grid_resolution: int = 100, gamma_min: float = 1e-3, method: Method = "auto") -> float:
    return mu0_search(dist, grid_resolution, gamma_min, method).value


# ---------------------------------------------------------------------------
# Constant degree


def const_degree_psi(d: int, gamma: float, lam: float) -> float:
    """Psi(gamma, lam gamma(1-gamma) d) for constant degree d."""
    return 0.5 * d * (entropy(gamma) - gamma * entropy(lam * (1.0 - gamma)) - (1.0 - gamma) * entropy(lam * gamma))


def const_degree_restriction(d: int, lam: float) -> tuple[bool, float, float]:
    """(H(lam/2) < (1 - 2/d) log 2, lhs, rhs)."""
    lhs = entropy(0.5 * lam)
    rhs = (1.0 - 2.0 / d) * LOG2
    return lhs < rhs, lhs, rhs


def const_degree_lambda0(d: int) -> float:
    """Largest lam in (0, 1) meeting the restriction (its boundary root)."""
    if d < 3:
        raise InapplicableError(f"constant degree needs d >= 3, got {d}")
    return brentq(lambda lam: entropy(0.5 * lam) - (1.0 - 2.0 / d) * LOG2, 0.0, 1.0, xtol=1e-15)


def const_degree_lambda_d(d: int) -> float:
    return 1.0 - math.sqrt(LOG2 / d)


def const_degree_psi_margin(d: int, lam: float, points: int = 999) -> float:
    """min over a gamma grid in (0, 1) of Psi - H at lambda fraction lam."""
    gammas = np.linspace(0.0, 1.0, points + 2)[1:-1]
    return float(min(const_degree_psi(d, g, lam) - entropy(g) for g in gammas))


def const_degree_bounds(d: int, tau: float, eps: float = 0.0) -> BoundReport:
    if d < 3:
        raise InapplicableError(f"constant degree needs d >= 3, got {d}")
    if not tau > 0 or not (0.0 <= eps < 1.0):
        raise ParameterError("need tau > 0 and eps in [0, 1)")
    lam_d = const_degree_lambda_d(d)
    threshold1 = 1.0 / (d - 2)
    threshold2 = 1.0 / (d * lam_d)
    holds, lhs, rhs = const_degree_restriction(d, lam_d)
    safe_lambda = 1.0 - 2.0 * math.sqrt(LOG2 / d)
    terms: dict[str, Any] = {
        "threshold_existence": threshold1,
        "threshold_explicit": threshold2,
        "lambda_d": lam_d,
        "lambda0": const_degree_lambda0(d),
        "safe_lambda": safe_lambda,
        "restriction_holds": holds,
        "restriction_lhs": lhs,
        "restriction_rhs": rhs,
        "psi_margin_lambda_d": const_degree_psi_margin(d, lam_d),
        "psi_margin_safe_lambda": const_degree_psi_margin(d, safe_lambda) if safe_lambda > 0 else None,
        "psi_half_zero": 0.5 * d * LOG2,
    }
    report = BoundReport(
        kind="cm-constant",
        inputs={"d": d, "tau": tau, "eps": eps},
        threshold_tau=threshold1,
        feasible=tau > threshold1,
        terms=terms,
    )
    if not holds:
        report.notes.append("lambda_d does not satisfy H(lambda/2) < (1 - 2/d) log 2; see lambda0 and safe_lambda")
    if not report.feasible:
        report.notes.append(f"tau <= 1/(d-2) = {threshold1:.6g}")
        return report
    if tau > threshold2:
        x = tau * d * lam_d
        report.growth_exponent = (1.0 - eps) * math.log(x) + 1.0 / x - 1.0
    else:
        report.notes.append(f"exponential growth holds but the explicit exponent needs tau > {threshold2:.6g}")
    return report


# ---------------------------------------------------------------------------
# Poisson degree


def poisson_lambda(mu: float) -> float:
    return 1.0 - C4 / math.sqrt(mu)


def poisson_s(gamma, lam):
    g = np.asarray(gamma, dtype=float)
    q = lam * g * (1.0 - g)
    out = q + np.sqrt(q * q + g * g + (1.0 - g) ** 2)
    return float(out) if out.ndim == 0 else out


def poisson_s_bounds(lam: float) -> tuple[float, float]:
    """(c1, c2) with 1 - c1 g(1-g) <= s(g) <= 1 - c2 g(1-g)."""
    return 4.0 - lam - math.sqrt(lam * lam + 8.0), 1.0 - lam


def poisson_stationary_point(mu: float, gamma: float, rho: float) -> tuple[float, float]:
    root = math.sqrt(rho * rho + mu * mu * (gamma * gamma + (1.0 - gamma) ** 2)) + rho
    return rho + mu * mu * gamma * gamma / root, rho + mu * mu * (1.0 - gamma) ** 2 / root


def poisson_psi_closed_form(mu: float, gamma: float, lam: float) -> float:
    """Psi(gamma, lam gamma(1-gamma) mu) for Poisson(mu) degrees."""
    s = poisson_s(gamma, lam)
    return mu * (1.0 - s + lam * gamma * (1.0 - gamma) * math.log(s))


def poisson_gamma0(mu: float) -> float:
    if not mu > C4 * C4:
        raise InapplicableError(f"explicit Poisson branch needs mu > {C4 * C4:.6f}, got {mu}")
    lam = poisson_lambda(mu)
    a = (1.0 - lam) * mu
    disc = (a - 2.0) ** 2 - LOG2 * (8.0 * LOG2 - 4.0) * lam * a
    inner = ((LOG2 * lam - 1.0) * a + 2.0 + math.sqrt(max(disc, 0.0))) / (4.0 * LOG2 * lam * a)
    return 0.5 - math.sqrt(min(max(inner, 0.0), 0.25))


def _poisson_scale(mu: float) -> float:
    return (math.sqrt(mu) - C4) * math.sqrt(mu)


def poisson_f(mu: float) -> float:
    return 1.0 / ((1.0 - poisson_gamma0(mu)) * _poisson_scale(mu))


def _poisson_g_terms(tau: float, mu: float, eps: float) -> dict[str, float]:
    g0 = poisson_gamma0(mu)
    scale = _poisson_scale(mu)
    g1 = min(1.0 - g0, 1.0 - 1.0 / (scale * tau))
    log_part = math.log(tau * scale) * (g1 - g0)
    # integral of log s over [1 - g1, 1]
    healthy = -1.0 - (xlogy(1.0 - g1, 1.0 - g1) - (1.0 - g1))
    healthy_tight = (xlogy(1.0 - g0, 1.0 - g0) - (1.0 - g0)) - (xlogy(1.0 - g1, 1.0 - g1) - (1.0 - g1))
    return {
        "gamma0": g0,
        "gamma1": g1,
        "log_term": log_part,
        "healthy_integral": float(healthy),
        "slack": -eps / mu,
        "g": float(log_part + healthy - eps / mu),
        "tight_exponent": float(log_part + healthy_tight - eps / mu),
    }


def poisson_g(tau: float, mu: float, eps: float = 0.0) -> float:
    return _poisson_g_terms(tau, mu, eps)["g"]


def poisson_bounds(mu: float, tau: float, eps: float = 0.0) -> BoundReport:
    if not mu > 0 or not tau > 0 or eps < 0:
        raise ParameterError("need mu > 0, tau > 0 and eps >= 0")
    dist = DegreeDistribution.poisson(mu)
    satisfied, value = metastability_condition(dist)
    terms: dict[str, Any] = {
        "e_2_pow_minus_half_d": value,
        "condition_holds": satisfied,
        "existence_condition": poisson_existence_condition(mu),
        "explicit_branch_min_mu": C4 * C4,
    }
    try:
        est = mu0_search(dist)
        terms["mu0"] = est.value
        terms["mu0_threshold"] = 1.0 / est.value if est.value > 0 else math.inf
    except InapplicableError:
        terms["mu0"] = None
        terms["mu0_threshold"] = None
    report = BoundReport(kind="cm-poisson", inputs={"mu": mu, "tau": tau, "eps": eps}, terms=terms)

    if not mu > C4 * C4:
        report.notes.append(f"mu <= 8 log 2 / (2 - log 2) = {C4 * C4:.4f}: existence branch only")
        if terms["mu0_threshold"] is not None:
            report.threshold_tau = terms["mu0_threshold"]
            report.feasible = tau > report.threshold_tau
        else:
            report.notes.append("no gamma with Psi(gamma, 0) > H(gamma): method inapplicable")
        return report

    lam = poisson_lambda(mu)
    c1, c2 = poisson_s_bounds(lam)
    a1, a2 = poisson_stationary_point(mu, 0.5, lam * mu / 4.0)
    terms.update(
        {
            "c4": C4,
            "lambda": lam,
            "c1": c1,
            "c2": c2,
            "s_half": poisson_s(0.5, lam),
            "a1_half": a1,
            "a2_half": a2,
            "psi_half": poisson_psi_closed_form(mu, 0.5, lam),
            "f": poisson_f(mu),
        }
    )
    report.threshold_tau = terms["f"]
    report.feasible = tau > report.threshold_tau
    if not report.feasible:
        report.notes.append(f"tau <= f(mu) = {terms['f']:.6g}")
        return report
    g_terms = _poisson_g_terms(tau, mu, eps)
    terms.update(g_terms)
    report.growth_exponent = g_terms["g"]
    if report.growth_exponent <= 0:
        report.notes.append("g is not positive this close to f(mu); tight_exponent integrates over [gamma0, gamma1] only")
    return report


def configuration_bounds(dist: DegreeDistribution, tau: float, grid_resolution: int = 100, gamma_min: float = 1e-3) -> BoundReport:
    """Threshold 1/mu0 for an arbitrary degree distribution (existence only, no exponent)."""
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    satisfied, value = metastability_condition(dist)
    report = BoundReport(
        kind="cm-general",
        inputs={"dist": dist.label(), "tau": tau, "grid_resolution": grid_resolution, "gamma_min": gamma_min},
        terms={"e_2_pow_minus_half_d": value, "condition_holds": satisfied},
    )
    if not satisfied:
        report.notes.append("E[2^{-D/2}] >= 1/2: the half-size sets are not controlled")
    try:
        est = mu0_search(dist, grid_resolution, gamma_min)
    except InapplicableError as e:
        report.notes.append(str(e))
        return report
    report.terms.update({"mu0": est.value, "mu0_gamma": est.gamma, "mu0_lambda_frac": est.lambda_frac})
    if est.value > 0:
        report.threshold_tau = 1.0 / est.value
        report.feasible = satisfied and tau > report.threshold_tau
    return report
