"""Experiment orchestration: seeded replication over (n, seed) cells,
deterministic CSV emission, and scaling fits.

CSV columns, in order: kind,n,q,seed,solver,success,cost,wall_ms,extra_json.
Row order is (n, seed, solver) lexicographic regardless of scheduling, and
wall_ms is 0 unless timing is explicitly requested, so identical configs
produce byte-identical files. A commented footer carries the summary.
Parallelism over cells is capped by the RAINBOW_OPT_THREADS variable.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .instance import SeedSpec, color_edges, edge_count, gen_euclidean, gen_uniform_costs

CSV_HEADER = "kind,n,q,seed,solver,success,cost,wall_ms,extra_json"

KINDS = ("mst-gap", "tsp-gap", "repeat", "copies", "kruskal-uniform",
         "rainbow-mst-trend", "tree-construct", "tour-greedy")


@dataclass
class ExperimentConfig:
    kind: str
    ns: list[int]
    seeds: int
    out: str | None = None
    base_seed: int = 0
    params: dict = field(default_factory=dict)
    record_timing: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if self.seeds < 0:
            raise ValueError("seeds must be nonnegative")


@dataclass
class RunRecord:
    kind: str
    n: int
    q: int
    seed: int
    solver: str
    success: bool
    cost: float
    wall_ms: float
    extra: dict


@dataclass
class ScalingFit:
    coefficient: float
    exponent: float
    residual: float
    sqrtlog_coefficient: float | None
    sqrtlog_residual: float | None
    ns: list[int]
    means: list[float]


def fit_scaling(ns, means) -> ScalingFit:
    """Least squares of log(mean) on log(n): mean ~ a * n^b. Also evaluates
    the one-parameter a * sqrt(n) * log(n) model and reports both residuals.
    Non-positive means are excluded with a warning."""
    ns = list(ns)
    means = list(means)
    keep = [(n, m) for n, m in zip(ns, means) if m > 0]
    if len(keep) < len(means):
        import warnings

        warnings.warn(f"excluded {len(means) - len(keep)} non-positive means from fit")
    if len(keep) < 2:
        raise ValueError("need at least 2 positive points to fit")
    xs = np.log([n for n, _ in keep])
    ys = np.log([m for _, m in keep])
    b, loga = np.polyfit(xs, ys, 1)
    resid = float(np.sqrt(np.mean((ys - (loga + b * xs))**2)))
    sl = np.log([math.sqrt(n) * math.log(n) for n, _ in keep])
    logc = float(np.mean(ys - sl))
    slresid = float(np.sqrt(np.mean((ys - sl - logc)**2)))
    return ScalingFit(coefficient=float(np.exp(loga)), exponent=float(b),
                      residual=resid, sqrtlog_coefficient=float(np.exp(logc)),
                      sqrtlog_residual=slresid,
                      ns=[n for n, _ in keep], means=[m for _, m in keep])


def _cell_master(base_seed: int, n: int, s: int) -> int:
    return base_seed + 1_000_003 * n + s


def cell_rows(kind: str, n: int, s: int, base_seed: int, params: dict) -> list[RunRecord]:
    """All solver rows of one (n, seed) cell; pure function of its arguments."""
    master = _cell_master(base_seed, n, s)
    seed = SeedSpec(master)
    rows = []

    def add(q, solver, success, cost, extra, wall_ms=0.0):
        extra = dict(extra)
        extra["params"] = params
        rows.append(RunRecord(kind=kind, n=n, q=q, seed=master, solver=solver,
                              success=success, cost=cost, wall_ms=wall_ms,
                              extra=extra))

    timing = params.get("record_timing", False)

    def clock():
        return time.monotonic() if timing else 0.0

    if kind == "kruskal-uniform":
        from .baselines import kruskal_mst

        ins = gen_uniform_costs(n, seed)
        t0 = clock()
        tree = kruskal_mst(ins)
        add(0, "kruskal", True, tree.total_cost, {}, (clock() - t0) * 1e3)
    elif kind == "rainbow-mst-trend":
        from .rainbow_exact import RainbowTree, min_rainbow_spanning_tree

        q = n - 1
        ins = gen_uniform_costs(n, seed)
        col = color_edges(edge_count(n), q, seed)
        t0 = clock()
        res = min_rainbow_spanning_tree(ins, col)
        ok = isinstance(res, RainbowTree)
        add(q, "rainbow-exact", ok, res.total_cost if ok else float("nan"),
            {} if ok else {"max_rank": res.max_common_rank}, (clock() - t0) * 1e3)
    elif kind == "mst-gap":
        from .baselines import kruskal_mst
        from .rainbow_exact import RainbowTree, min_rainbow_spanning_tree

        q = n - 1
        ins = gen_euclidean(n, seed=seed)
        col = color_edges(edge_count(n), q, seed)
        t0 = clock()
        res = min_rainbow_spanning_tree(ins, col)
        ok = isinstance(res, RainbowTree)
        add(q, "rainbow-exact", ok, res.total_cost if ok else float("nan"),
            {} if ok else {"max_rank": res.max_common_rank}, (clock() - t0) * 1e3)
        t0 = clock()
        tree = kruskal_mst(ins)
        add(q, "kruskal", True, tree.total_cost, {}, (clock() - t0) * 1e3)
    elif kind == "tree-construct":
        from .tree_construct import construct_tree

        q = n - 1
        K = int(params.get("K", 20))
        B = float(params.get("B", 2.0))
        ins = gen_euclidean(n, seed=seed)
        col = color_edges(edge_count(n), q, seed)
        t0 = clock()
        res = construct_tree(ins, col, K=K, B=B)
        diag = {k: res.diagnostics[k] for k in
                ("E1_size", "E2_size", "gamma_weight", "A_size", "matching_size")}
        add(q, "tree-construct", res.ok,
            res.tree.total_cost if res.ok else float("nan"), diag,
            (clock() - t0) * 1e3)
    elif kind == "tour-greedy":
        from .tour_greedy import rainbow_tour

        eps = float(params.get("eps", 0.2))
        q = math.ceil((1.0 + eps) * n)
        ins = gen_euclidean(n, seed=seed)
        col = color_edges(edge_count(n), q, seed)
        t0 = clock()
        res = rainbow_tour(ins, col, eps=eps,
                           c_param=float(params.get("c_param", 0.9)),
                           budget=int(params.get("budget", 50)))
        keys = ("r", "k0", "retries", "fallback_relaxed", "color_skips",
                "lambda_exceed_frac", "greedy_cost", "completion_cost")
        diag = {k: res.diagnostics[k] for k in keys if k in res.diagnostics}
        add(q, "tour-greedy", res.ok,
            res.tour.total_cost if res.ok else float("nan"), diag,
            (clock() - t0) * 1e3)
    elif kind == "tsp-gap":
        from .baselines import tsp_heuristic
        from .tour_greedy import rainbow_tour

        eps = float(params.get("eps", 0.2))
        q = math.ceil((1.0 + eps) * n)
        ins = gen_euclidean(n, seed=seed)
        col = color_edges(edge_count(n), q, seed)
        t0 = clock()
        res = rainbow_tour(ins, col, eps=eps,
                           c_param=float(params.get("c_param", 0.9)),
                           budget=int(params.get("budget", 50)))
        add(q, "tour-greedy", res.ok,
            res.tour.total_cost if res.ok else float("nan"), {},
            (clock() - t0) * 1e3)
        t0 = clock()
        base = tsp_heuristic(ins, max_sweeps=int(params.get("two_opt_sweeps", 60)))
        add(q, "two-opt", True, base.total_cost, {}, (clock() - t0) * 1e3)
    elif kind == "repeat":
        from .colorstats import empirical_repeat_count

        beta = int(params.get("beta", n))
        rep = empirical_repeat_count(n, beta, seed)
        add(beta, "repeat-empirical", True, float(rep.empirical),
            {"expected": rep.expected, "fraction": rep.fraction})
    elif kind == "copies":
        from .colorstats import find_pair_copies

        eps = float(params.get("copy_eps", 0.25))
        d = float(params.get("copy_d", 4.0))
        ins = gen_euclidean(n, scale=math.sqrt(n), seed=seed)
        t0 = clock()
        cs = find_pair_copies(ins, eps, d)
        add(0, "pair-copies", True, float(cs.count),
            {"per_n": cs.count / n}, (clock() - t0) * 1e3)
    else:
        raise ValueError(f"unhandled kind {kind}")
    return rows


def _cell_worker(args):
    return _cell_safe(*args)


def _cell_safe(kind, n, s, base_seed, params):
    """A crashing solver yields one failed row instead of aborting the run."""
    try:
        return cell_rows(kind, n, s, base_seed, params)
    except Exception as e:  # noqa: BLE001 - row-level isolation is the contract
        return [RunRecord(kind=kind, n=n, q=0, seed=_cell_master(base_seed, n, s),
                          solver="error", success=False, cost=float("nan"),
                          wall_ms=0.0, extra={"error": str(e), "params": params})]


def max_workers() -> int:
    env = os.environ.get("RAINBOW_OPT_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return 1


def run_experiment(config: ExperimentConfig):
    """Run all (n, seed) cells, write the CSV if configured, and return
    (records, summary dict)."""
    params = dict(config.params)
    params["record_timing"] = config.record_timing
    tasks = [(config.kind, n, s, config.base_seed, params)
             for n in config.ns for s in range(config.seeds)]
    workers = max_workers()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_worker, tasks, chunksize=1))
    else:
        results = [_cell_safe(*t) for t in tasks]
    records: list[RunRecord] = [r for rows in results for r in rows]
    records.sort(key=lambda r: (r.n, r.seed, r.solver))
    summary = summarize(config, records)
    if config.out:
        write_csv(config.out, records, summary)
    return records, summary


def summarize(config: ExperimentConfig, records: list[RunRecord]) -> dict:
    """Per-n aggregates plus scaling fits where they apply."""
    out: dict = {"kind": config.kind, "ns": list(config.ns), "seeds": config.seeds}
    per_n_cost: dict[int, list[float]] = {n: [] for n in config.ns}
    per_n_gap: dict[int, list[float]] = {n: [] for n in config.ns}
    success: dict[int, int] = {n: 0 for n in config.ns}
    total: dict[int, int] = {n: 0 for n in config.ns}
    paired: dict[tuple[int, int], dict[str, RunRecord]] = {}
    for r in records:
        paired.setdefault((r.n, r.seed), {})[r.solver] = r
    for (n, _), group in paired.items():
        solvers = sorted(group)
        primary = group[solvers[0] if len(solvers) == 1 else
                        ("rainbow-exact" if "rainbow-exact" in group else
                         "tour-greedy" if "tour-greedy" in group else solvers[0])]
        total[n] += 1
        if primary.success:
            success[n] += 1
            per_n_cost[n].append(primary.cost)
            ref = None
            if "kruskal" in group:
                ref = group["kruskal"]
            elif "two-opt" in group:
                ref = group["two-opt"]
            if ref is not None and ref.success:
                per_n_gap[n].append(primary.cost - ref.cost)
    out["success_rate"] = {n: (success[n] / total[n] if total[n] else 0.0)
                           for n in config.ns}
    out["mean_cost"] = {n: (float(np.mean(per_n_cost[n])) if per_n_cost[n] else None)
                        for n in config.ns}
    if any(per_n_gap[n] for n in config.ns):
        out["mean_gap"] = {n: (float(np.mean(per_n_gap[n])) if per_n_gap[n] else None)
                           for n in config.ns}
        means = [out["mean_gap"][n] for n in config.ns]
        if len(config.ns) >= 2 and all(m is not None and m > 0 for m in means):
            fit = fit_scaling(config.ns, means)
            out["gap_fit_exponent"] = fit.exponent
            out["gap_fit_coefficient"] = fit.coefficient
            out["gap_fit_residual"] = fit.residual
    means = [out["mean_cost"][n] for n in config.ns]
    if len(config.ns) >= 3 and all(m is not None and m > 0 for m in means):
        fit = fit_scaling(config.ns, means)
        out["cost_fit_exponent"] = fit.exponent
        out["cost_fit_coefficient"] = fit.coefficient
        if config.kind in ("tour-greedy", "tsp-gap"):
            out["cost_sqrtlog_coefficient"] = fit.sqrtlog_coefficient
            out["cost_sqrtlog_residual"] = fit.sqrtlog_residual
    return out


def format_row(r: RunRecord) -> str:
    extra = json.dumps(r.extra, sort_keys=True, separators=(",", ":"))
    extra = extra.replace('"', "'")  # keep the CSV single-token per field
    cost = "nan" if math.isnan(r.cost) else f"{r.cost:.17g}"
    return (f"{r.kind},{r.n},{r.q},{r.seed},{r.solver},"
            f"{1 if r.success else 0},{cost},{r.wall_ms:.17g},{extra}")


def write_csv(path: str, records: list[RunRecord], summary: dict | None = None):
    lines = [CSV_HEADER]
    lines.extend(format_row(r) for r in records)
    if summary is not None:
        blob = json.dumps(summary, sort_keys=True)
        lines.append(f"# summary {blob}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_csv(path: str) -> list[dict]:
    rows = []
    with open(path) as f:
        header = f.readline().strip().split(",")
        for line in f:
            if line.startswith("#") or not line.strip():
                continue
            parts = line.rstrip("\n").split(",", len(header) - 1)
            rows.append(dict(zip(header, parts)))
    return rows


def rerun_row(path: str, row_index: int) -> tuple[dict, RunRecord]:
    """Recompute one CSV row from its (kind, n, seed, params) cell."""
    rows = read_csv(path)
    if not (0 <= row_index < len(rows)):
        raise IndexError(f"row {row_index} outside 0..{len(rows) - 1}")
    row = rows[row_index]
    extra = json.loads(row["extra_json"].replace("'", '"'))
    params = extra.get("params", {})
    kind = row["kind"]
    n = int(row["n"])
    master = int(row["seed"])
    # master = base_seed + 1_000_003*n + s; any (base, s) split with the same
    # sum reproduces the cell, so rerun with s = 0
    rec_rows = cell_rows(kind, n, 0, master - 1_000_003 * n, params)
    for r in rec_rows:
        if r.solver == row["solver"]:
            return row, r
    raise KeyError(f"solver {row['solver']} not produced by rerun")
