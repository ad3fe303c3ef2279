from __future__ import annotations

import argparse
import logging
import math
from pathlib import Path
from typing import Any, Callable, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from ..core.config import get_settings
from ..core.errors import BudgetExceededError, InapplicableError, MetastabError, ParameterError
from ..services import birthdeath, bounds_cm, bounds_er, contact, graph, pairing
from ..storage.artifacts import OutputMetadata, emit, render_csv, render_json
from ..storage.edgelist import format_edge_list, read_edge_list

log = logging.getLogger("metastab.cli")

Subcommand = Literal["gen", "mincut", "pairing", "hitting", "simulate", "bounds-er", "bounds-cm", "verify"]
STOCHASTIC = {"gen", "simulate", "mincut", "verify"}


class UsageError(MetastabError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 1 for usage errors."""

    def error(self, message: str):
        self.print_usage()
        self.exit(1, f"{self.prog}: error: {message}\n")


class RunConfig(BaseModel):
    subcommand: Subcommand
    params: dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    output: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    threads: int = 0

    def metadata(self, **summary: Any) -> OutputMetadata:
        params = {k: v for k, v in self.params.items() if v is not None}
        return OutputMetadata(subcommand=self.subcommand, seed=self.seed, params=params, summary=summary)


# ---------------------------------------------------------------------------
# Flag helpers


def parse_range(text: str) -> tuple[float, float, int]:
    """``lo:hi:count``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"expected lo:hi:count, got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as e:
        raise UsageError(f"bad range {text!r}: {e}") from e
    if count < 1 or hi < lo:
        raise UsageError(f"bad range {text!r}")
    return lo, hi, count


def parse_sweep(text: str) -> tuple[str, np.ndarray]:
    """``name=lo:hi:count`` to (name, linspace)."""
    name, sep, rest = text.partition("=")
    if not sep:
        raise UsageError(f"expected name=lo:hi:count, got {text!r}")
    lo, hi, count = parse_range(rest)
    return name.strip(), np.linspace(lo, hi, count)


def _int_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    try:
        return int(lo), int(hi or lo)
    except ValueError as e:
        raise UsageError(f"expected k or lo:hi, got {text!r}") from e


def _load_graph(params: dict[str, Any], seed: int) -> graph.Graph:
    if params.get("graph"):
        return read_edge_list(params["graph"])
    if params.get("complete"):
        return graph.Graph.complete(int(params["complete"]))
    if params.get("er"):
        n, p = params["er"]
        return graph.gen_erdos_renyi(int(n), float(p), seed)
    if params.get("cm"):
        n, spec = params["cm"]
        return graph.gen_configuration(int(n), graph.DegreeDistribution.parse(spec), seed)
    raise UsageError("give one of --graph, --complete, --er N P, --cm N DIST")


def _read_birth_rates(path: str) -> tuple[int, int, list[float], Optional[list[float]]]:
    """Rows ``k birth [death]`` for k0 < k <= k1; the birth rate at k1 is ignored."""
    rows: list[list[float]] = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) not in (2, 3):
            raise UsageError(f"{path}:{lineno}: expected 'k birth [death]'")
        rows.append([float(x) for x in parts])
    if len(rows) < 1:
        raise UsageError(f"{path}: no rates")
    rows.sort(key=lambda r: r[0])
    ks = [int(r[0]) for r in rows]
    if ks != list(range(ks[0], ks[0] + len(ks))):
        raise UsageError(f"{path}: states must be consecutive")
    k0, k1 = ks[0] - 1, ks[-1]
    birth = [r[1] for r in rows[:-1]]
    with_death = [len(r) == 3 for r in rows]
    if any(with_death) and not all(with_death):
        raise UsageError(f"{path}: give a death rate on every row or on none")
    death = [r[2] for r in rows] if all(with_death) else None
    return k0, k1, birth, death


# ---------------------------------------------------------------------------
# Subcommands


def _gen(cfg: RunConfig) -> str:
    p = cfg.params
    g = _load_graph(p, cfg.seed)
    meta = {"tool": "metastab", "subcommand": "gen", "seed": cfg.seed}
    if p.get("er"):
        meta.update({"generator": "erdos-renyi", "n": p["er"][0], "p": p["er"][1]})
    elif p.get("cm"):
        meta.update({"generator": "configuration", "n": p["cm"][0], "dist": p["cm"][1]})
    log.info("generated graph: %s nodes, %s edges", g.n_nodes, g.edge_count())
    return format_edge_list(g, meta)


def _mincut(cfg: RunConfig) -> str:
    p = cfg.params
    g = _load_graph(p, cfg.seed)
    k_lo, k_hi = _int_range(p["k"])
    settings = get_settings()
    rows = []
    for k in range(k_lo, k_hi + 1):
        if p.get("samples"):
            value, witness = graph.sampled_min_cut_with_witness(g, k, int(p["samples"]), cfg.seed)
            exact = False
        else:
            try:
                value, witness = graph.min_cut_over_size(g, k, cap=p.get("cap") or settings.enumeration_cap)
                exact = True
            except BudgetExceededError as e:
                log.warning("k=%s: %s; sampling %s subsets", k, e, settings.sample_fallback)
                value, witness = graph.sampled_min_cut_with_witness(g, k, settings.sample_fallback, cfg.seed)
                exact = False
        rows.append((k, value, exact, " ".join(map(str, sorted(witness)))))
    if cfg.format == "json":
        return render_json([dict(zip(("k", "min_cut", "exact", "witness"), r)) for r in rows], cfg.metadata())
    return render_csv(("k", "min_cut", "exact", "witness"), rows, cfg.metadata())


def _pairing(cfg: RunConfig) -> str:
    p = cfg.params
    n1, n2 = int(p["n1"]), int(p["n2"])
    rows = pairing.tail_table(n1, n2)
    columns: tuple[str, ...] = ("l", "probability", "tail_bound")
    if p.get("exact"):
        law = pairing.enumerate_pairing_law(n1, n2)
        rows = [r + (law.prob(r[0]),) for r in rows]
        columns += ("enumerated",)
    law = pairing.mixed_pair_pmf(n1, n2)
    meta = cfg.metadata(mean=law.mean)
    if cfg.format == "json":
        return render_json([dict(zip(columns, r)) for r in rows], meta)
    return render_csv(columns, rows, meta)


def _hitting(cfg: RunConfig) -> str:
    p = cfg.params
    if p.get("complete"):
        if p.get("lambda") is None:
            raise UsageError("--complete needs --lambda")
        n, lam = int(p["complete"]), float(p["lambda"])
        spec = birthdeath.complete_graph_spec(n, lam)
    elif p.get("birth_rates"):
        k0, k1, birth, death = _read_birth_rates(p["birth_rates"])
        spec = birthdeath.BirthDeathSpec.from_rates(k0, k1, birth, death)
        n = None
    else:
        raise UsageError("hitting needs --complete N --lambda L or --birth-rates FILE")

    logs = birthdeath.log_hitting_times(spec)
    lower = birthdeath.hitting_lower_bound(spec).log_value
    upper = birthdeath.hitting_upper_bound(spec).log_value
    summary: dict[str, Any] = {"log_lower": lower, "log_upper": upper, "log_H_top": float(logs[-1])}
    if n is not None:
        summary["per_node_log_H"] = float(logs[-1]) / n
        if lam > 1:
            summary["limit"] = bounds_er.complete_graph_exponent(lam)
        if p.get("bounds"):
            b = birthdeath.complete_graph_bounds(n, lam)
            summary.update({"log_explicit_upper": b.log_upper, "log_proposition_lower": b.log_lower, "proposition_k1": b.k1})
    rows = [(int(k), float(h), lower, upper) for k, h in zip(spec.states, logs)]
    if cfg.format == "json":
        return render_json({"rows": [dict(zip(("k", "log_H", "log_lower", "log_upper"), r)) for r in rows]}, cfg.metadata(**summary))
    return render_csv(("k", "log_H", "log_lower", "log_upper"), rows, cfg.metadata(**summary))


def _simulate(cfg: RunConfig) -> str:
    p = cfg.params
    g = _load_graph(p, cfg.seed)
    initial = "all" if not p.get("initial") else frozenset(int(x) for x in p["initial"].split(","))
    run = contact.ContactConfig(tau=float(p["tau"]), initial=initial, t_max=p.get("t_max"), seed=cfg.seed)

    if p.get("trajectory"):
        lo, hi, count = parse_range(p["trajectory"])
        times = np.linspace(lo, hi, count)
        counts = contact.infected_trajectory(g, run, times.tolist())
        rows = list(zip(times.tolist(), counts))
        if cfg.format == "json":
            return render_json([{"t": t, "infected": c} for t, c in rows], cfg.metadata())
        return render_csv(("t", "infected"), rows, cfg.metadata())

    samples = contact.run_replications(g, run, int(p["reps"]), threads=cfg.threads or None)
    estimate = contact.summarize(samples, run)
    if cfg.format == "json":
        return render_json(estimate, cfg.metadata())
    rows = [(s.index, s.time, s.censored, s.peak_infected, s.events) for s in samples]
    summary = {"mean": estimate.mean, "stderr": estimate.stderr, "restricted_mean": estimate.restricted_mean, "censored": estimate.censored_count}
    return render_csv(("index", "time", "censored", "peak_infected", "events"), rows, cfg.metadata(**summary))


def _bounds_er(cfg: RunConfig) -> str:
    p = cfg.params
    if p.get("sweep"):
        name, values = parse_sweep(p["sweep"])
        if name != "sigma":
            raise UsageError(f"bounds er sweeps sigma only, got {name!r}")
        rows = bounds_er.tau0_curve(values.tolist())
        if cfg.format == "json":
            return render_json([dict(zip(("sigma", "tau0", "sigma_tau0"), r)) for r in rows], cfg.metadata())
        return render_csv(("sigma", "tau0", "sigma_tau0"), rows, cfg.metadata())

    eps = float(p.get("eps") or 0.0)
    if p.get("n") is not None:
        report = bounds_er.dense_growth_exponent(int(p["n"]), float(p["p"]), float(p["tau"]), eps, p.get("regime") or "constant")
    elif p.get("sigma") is not None:
        report = bounds_er.sparse_growth_exponent(float(p["sigma"]), float(p["tau"]), eps)
    else:
        raise UsageError("bounds er needs --sigma S --tau T, --n N --p P --tau T, or --sweep sigma=lo:hi:count")
    return _render_report(cfg, report)


def _bounds_cm(cfg: RunConfig) -> str:
    p = cfg.params
    dist = graph.DegreeDistribution.parse(p["dist"])
    if p.get("ratio_sweep"):
        lo, hi, count = parse_range(p["ratio_sweep"])
        rows = bounds_cm.psi_ratio_sweep(dist, np.geomspace(lo, hi, count).tolist())
        return _table(cfg, ("gamma", "psi", "entropy", "ratio"), rows)
    if p.get("psi_curve") is not None:
        lo, hi, count = parse_range(p.get("lambda_fracs") or "0:0.99:100")
        rows = bounds_cm.psi_curve(dist, float(p["psi_curve"]), np.linspace(lo, hi, count).tolist())
        return _table(cfg, ("lambda_frac", "rho", "psi", "entropy", "margin"), rows)

    if p.get("tau") is None:
        raise UsageError("bounds cm needs --tau, --ratio-sweep or --psi-curve")
    tau, eps = float(p["tau"]), float(p.get("eps") or 0.0)
    try:
        if dist.kind == "constant":
            report = bounds_cm.const_degree_bounds(dist.d, tau, eps)
        elif dist.kind == "poisson":
            report = bounds_cm.poisson_bounds(dist.mu, tau, eps)
        else:
            report = bounds_cm.configuration_bounds(dist, tau, int(p.get("grid") or 100), float(p.get("gamma_min") or 1e-3))
    except InapplicableError as e:
        report = bounds_er.BoundReport(kind=f"cm-{dist.kind}", inputs={"dist": dist.label(), "tau": tau}, notes=[str(e)])
    return _render_report(cfg, report)


def _uniform_bound(kind: str, g: graph.Graph, rho: float, p_edge: Optional[float]) -> Callable[[int], float]:
    n = g.n_nodes
    p_hat = p_edge if p_edge is not None else g.edge_count() / (n * (n - 1) / 2)
    if kind == "dense":
        return lambda k: rho * p_hat * k * (n - k)
    sp = bounds_er.sparse_params(p_hat * n)
    return lambda k: sp.rho(k / n) * sp.sigma * k * (n - k) / n


def _verify(cfg: RunConfig) -> str:
    p = cfg.params
    g = _load_graph(p, cfg.seed)
    n = g.n_nodes
    gamma = float(p["gamma"])
    if not (0.0 < gamma <= 0.5):
        raise UsageError(f"--gamma must be in (0, 1/2], got {gamma}")
    k_lo = max(1, math.ceil(gamma * n))
    k_hi = min(n - 1, math.floor((1.0 - gamma) * n))
    if k_hi < k_lo:
        raise UsageError(f"no set sizes in [{gamma} N, {1 - gamma} N] for N={n}")
    try:
        bound = _uniform_bound(p.get("kind") or "dense", g, float(p.get("rho") or 0.0), p.get("p"))
    except InapplicableError as e:
        return _render_report(cfg, {"feasible": False, "notes": [str(e)]})
    result = graph.verify_uniform_bound(g, k_lo, k_hi, bound, cap=p.get("cap"), seed=cfg.seed)
    rows = [(c.k, c.status, c.bound, c.min_cut, c.exact, c.note) for c in result.checks]
    summary = {"violations": len(result.violations), "inconclusive": len(result.inconclusive), "k_lo": k_lo, "k_hi": k_hi}
    if cfg.format == "json":
        return render_json(result, cfg.metadata(**summary))
    return render_csv(("k", "status", "bound", "min_cut", "exact", "note"), rows, cfg.metadata(**summary))


def _table(cfg: RunConfig, columns: Sequence[str], rows: list[tuple]) -> str:
    if cfg.format == "json":
        return render_json([dict(zip(columns, r)) for r in rows], cfg.metadata())
    return render_csv(columns, rows, cfg.metadata())


def _render_report(cfg: RunConfig, report: Any) -> str:
    """Single reports are JSON; ``--format csv`` flattens them to key,value rows."""
    if cfg.format == "json":
        return render_json(report, cfg.metadata())
    data = report.model_dump() if isinstance(report, BaseModel) else dict(report)
    terms = data.pop("terms", {}) or {}
    inputs = data.pop("inputs", {}) or {}
    notes = data.pop("notes", []) or []
    rows = [(k, v) for k, v in data.items()]
    rows += [(f"terms.{k}", terms[k]) for k in sorted(terms)]
    rows += [(f"inputs.{k}", inputs[k]) for k in sorted(inputs)]
    rows += [("note", note) for note in notes]
    return render_csv(("key", "value"), rows, cfg.metadata())


HANDLERS: dict[str, Callable[[RunConfig], str]] = {
    "gen": _gen,
    "mincut": _mincut,
    "pairing": _pairing,
    "hitting": _hitting,
    "simulate": _simulate,
    "bounds-er": _bounds_er,
    "bounds-cm": _bounds_cm,
    "verify": _verify,
}


def run(cfg: RunConfig) -> int:
    """Execute one subcommand and write its artifact. Returns the exit status."""
    try:
        text = HANDLERS[cfg.subcommand](cfg)
    except (UsageError, ParameterError, ValidationError, FileNotFoundError) as e:
        log.error("%s: %s", cfg.subcommand, e)
        return 1
    except Exception:
        log.exception("%s failed", cfg.subcommand)
        return 2
    emit(text, cfg.output)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def _graph_source(sp: argparse.ArgumentParser, required: bool = True) -> None:
    src = sp.add_mutually_exclusive_group(required=required)
    src.add_argument("--graph", help="edge-list file")
    src.add_argument("--complete", type=int, metavar="N", help="complete graph K_N")
    src.add_argument("--er", nargs=2, metavar=("N", "P"), help="Erdos-Renyi G(N, P)")
    src.add_argument("--cm", nargs=2, metavar=("N", "DIST"), help="configuration model with degree DIST")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=0)
    common.add_argument("--output", "-o", default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)

    parser = _Parser(prog="metastab", description="Contact-process metastability toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen", parents=[common], help="generate a random graph as an edge list")
    gen_src = sp.add_mutually_exclusive_group(required=True)
    gen_src.add_argument("--er", nargs=2, metavar=("N", "P"))
    gen_src.add_argument("--cm", nargs=2, metavar=("N", "DIST"))

    sp = sub.add_parser("mincut", parents=[common], help="minimum edge boundary per set size")
    _graph_source(sp)
    sp.add_argument("--k", required=True, help="k or lo:hi")
    sp.add_argument("--samples", type=int, default=None, help="sample instead of enumerating")
    sp.add_argument("--cap", type=int, default=None)

    sp = sub.add_parser("pairing", parents=[common], help="mixed-pair law with its tail bound")
    sp.add_argument("--n1", type=int, required=True)
    sp.add_argument("--n2", type=int, required=True)
    sp.add_argument("--exact", action="store_true", help="add the exhaustive-enumeration column")

    sp = sub.add_parser("hitting", parents=[common], help="birth-death expected hitting times")
    sp.add_argument("--complete", type=int, metavar="N")
    sp.add_argument("--lambda", dest="lambda_", type=float, metavar="L")
    sp.add_argument("--birth-rates", metavar="FILE")
    sp.add_argument("--bounds", action="store_true", help="add the explicit complete-graph bounds")

    sp = sub.add_parser("simulate", parents=[common], help="contact-process extinction times")
    _graph_source(sp)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--reps", type=int, default=100)
    sp.add_argument("--t-max", type=float, default=None)
    sp.add_argument("--initial", default=None, help="comma-separated infected nodes (default all)")
    sp.add_argument("--trajectory", default=None, metavar="LO:HI:COUNT", help="sample |I_t| on a time grid")

    bounds = sub.add_parser("bounds", help="analytic thresholds and growth exponents")
    bsub = bounds.add_subparsers(dest="family", required=True)
    sp = bsub.add_parser("er", parents=[common], help="Erdos-Renyi bounds")
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--eps", type=float, default=0.0)
    sp.add_argument("--regime", choices=("constant", "diverging"), default="constant")
    sp.add_argument("--sweep", metavar="sigma=LO:HI:COUNT")
    sp = bsub.add_parser("cm", parents=[common], help="configuration-model bounds")
    sp.add_argument("--dist", required=True, help="constant:d | poisson:mu | empirical:FILE")
    sp.add_argument("--tau", type=float)
    sp.add_argument("--eps", type=float, default=0.0)
    sp.add_argument("--grid", type=int, default=100, help="gamma grid resolution for mu0")
    sp.add_argument("--gamma-min", type=float, default=1e-3)
    sp.add_argument("--ratio-sweep", metavar="LO:HI:COUNT", help="Psi(gamma, 0) / H(gamma) table")
    sp.add_argument("--psi-curve", type=float, metavar="GAMMA", help="Psi(gamma, .) along lambda_frac")
    sp.add_argument("--lambda-fracs", metavar="LO:HI:COUNT")

    sp = sub.add_parser("verify", parents=[common], help="check a uniform cut bound on a graph")
    _graph_source(sp)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--rho", type=float, default=0.5)
    sp.add_argument("--kind", choices=("dense", "sparse"), default="dense")
    sp.add_argument("--p", type=float, default=None, help="edge probability (default: observed density)")
    sp.add_argument("--cap", type=int, default=None)
    return parser


_DEFAULT_FORMAT = {"bounds-er": "json", "bounds-cm": "json", "verify": "json"}
_SHARED = {"command", "family", "seed", "threads", "output", "format"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    settings = get_settings()
    subcommand = f"{args.command}-{args.family}" if args.command == "bounds" else args.command
    params = {k.rstrip("_"): v for k, v in vars(args).items() if k not in _SHARED}
    if params.get("er"):
        params["er"] = list(params["er"])
    if params.get("cm"):
        params["cm"] = list(params["cm"])
    seed = args.seed
    if seed is None and subcommand in STOCHASTIC:
        seed = settings.default_seed
    fmt = args.format
    if fmt is None:
        # a report sweep is still a table
        is_table = bool(params.get("sweep") or params.get("ratio_sweep") or params.get("psi_curve") is not None)
        fmt = "csv" if is_table else _DEFAULT_FORMAT.get(subcommand, "csv")
    return RunConfig(subcommand=subcommand, params=params, seed=seed, output=args.output, format=fmt, threads=args.threads)


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    logging.basicConfig(level=settings.log_level)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = config_from_args(args)
    except ValidationError as e:
        log.error("invalid arguments: %s", e)
        return 1
    log.info("metastab %s (seed=%s)", cfg.subcommand, cfg.seed)
    return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
