"""Repeated-color statistics, isolated pattern copies, and the rainbow-vs-
plain gap experiments.

The closed-form expected number of colors used more than once when alpha
items are colored from beta colors is
    E(Z) = beta * (1 - (1 - 1/beta)^alpha - (alpha/beta)(1 - 1/beta)^(alpha-1)).
With alpha = beta -> infinity the repeated fraction tends to 1 - 2/e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .instance import SeedSpec, color_edges, edge_count, gen_euclidean


@dataclass
class RepeatCountReport:
    alpha: int
    beta: int
    expected: float
    empirical: int
    fraction: float  # empirical Z / beta


@dataclass
class CopySet:
    eps: float
    d: float
    copies: list[tuple[int, int]]  # disjoint point-index pairs

    @property
    def count(self) -> int:
        return len(self.copies)


@dataclass
class GapReport:
    ns: list[int]
    mean_gap: list[float]
    stderr: list[float]
    per_seed: dict[int, list[float]]
    excluded: dict[int, int]
    exponent: float
    coefficient: float
    residual: float
    label: str = ""
    extra: dict = field(default_factory=dict)


def expected_repeat_count(alpha: int, beta: int) -> float:
    """Closed-form E(number of colors used more than once)."""
    if alpha < 0 or beta < 1:
        raise ValueError("need alpha >= 0, beta >= 1")
    if alpha <= 1:
        return 0.0
    p = 1.0 - 1.0 / beta
    return beta * (1.0 - p**alpha - (alpha / beta) * p**(alpha - 1))


def empirical_repeat_count(alpha: int, beta: int, seed: SeedSpec | int) -> RepeatCountReport:
    """Sample alpha uniform colors and count colors hit at least twice."""
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    draws = seed.rng("colors").integers(0, beta, size=alpha)
    counts = np.bincount(draws, minlength=beta)
    z = int((counts >= 2).sum())
    return RepeatCountReport(alpha=alpha, beta=beta,
                             expected=expected_repeat_count(alpha, beta),
                             empirical=z, fraction=z / beta)


def find_pair_copies(instance, eps: float, d: float) -> CopySet:
    """Greedy-maximal disjoint set of two-point unit-distance copies.

    A copy is a pair {u, v} with |u - v| in (1 - 2*eps, 1 + 2*eps) such that
    no other point lies within distance d of u or v. Intended for instances
    in scaled coordinates (side ~ sqrt(n), one point per unit area);
    detection uses a uniform grid of cell side max(d, 1 + 2*eps).
    """
    if not (eps < 0.5 < d):
        raise ValueError("need eps < 1/2 < d")
    pts = np.asarray(instance.points)
    n = len(pts)
    cell = max(d, 1.0 + 2.0 * eps)
    grid: dict[tuple[int, int], list[int]] = {}
    for i in range(n):
        key = (int(pts[i, 0] // cell), int(pts[i, 1] // cell))
        grid.setdefault(key, []).append(i)

    def neighbors(i, radius):
        cx, cy = int(pts[i, 0] // cell), int(pts[i, 1] // cell)
        for gx in range(cx - 1, cx + 2):
            for gy in range(cy - 1, cy + 2):
                for j in grid.get((gx, gy), ()):
                    if j != i and np.hypot(*(pts[j] - pts[i])) <= radius:
                        yield j

    lo, hi = 1.0 - 2.0 * eps, 1.0 + 2.0 * eps
    taken = np.zeros(n, dtype=bool)
    copies = []
    for i in range(n):
        if taken[i]:
            continue
        for j in neighbors(i, hi):
            if taken[j] or j < i:
                continue
            dij = float(np.hypot(*(pts[j] - pts[i])))
            if not (lo < dij < hi):
                continue
            lonely = True
            for k in set(neighbors(i, d)) | set(neighbors(j, d)):
                if k != i and k != j:
                    lonely = False
                    break
            if lonely:
                taken[i] = taken[j] = True
                copies.append((i, j))
                break
    return CopySet(eps=eps, d=d, copies=copies)


def verify_copies(instance, copy_set: CopySet) -> bool:
    """Brute-force re-check of the eps and D conditions plus disjointness."""
    pts = np.asarray(instance.points)
    lo, hi = 1.0 - 2.0 * copy_set.eps, 1.0 + 2.0 * copy_set.eps
    seen: set[int] = set()
    for (u, v) in copy_set.copies:
        if u in seen or v in seen:
            return False
        seen.update((u, v))
        duv = float(np.hypot(*(pts[u] - pts[v])))
        if not (lo < duv < hi):
            return False
        others = np.delete(np.arange(len(pts)), [u, v])
        if len(others):
            du = np.hypot(*(pts[others] - pts[u]).T)
            dv = np.hypot(*(pts[others] - pts[v]).T)
            if min(du.min(), dv.min()) <= copy_set.d:
                return False
    return True


def _fit_loglog(ns, means):
    from .harness import fit_scaling

    return fit_scaling(ns, means)


def mst_gap_experiment(ns, seeds_per_n: int, base_seed: int = 0) -> GapReport:
    """Per-n mean of exact rainbow MST minus plain MST on Euclidean
    instances with q = n - 1, plus a log-log power fit of the mean gap."""
    from .baselines import kruskal_mst
    from .rainbow_exact import RainbowTree, min_rainbow_spanning_tree

    per_seed: dict[int, list[float]] = {}
    excluded: dict[int, int] = {}
    for n in ns:
        gaps = []
        skipped = 0
        for s in range(seeds_per_n):
            seed = SeedSpec(base_seed + 7919 * n + s)
            ins = gen_euclidean(n, seed=seed)
            col = color_edges(edge_count(n), n - 1, seed)
            res = min_rainbow_spanning_tree(ins, col)
            if not isinstance(res, RainbowTree):
                skipped += 1
                continue
            gaps.append(res.total_cost - kruskal_mst(ins).total_cost)
        per_seed[n] = gaps
        excluded[n] = skipped
    means = [float(np.mean(per_seed[n])) for n in ns]
    errs = [float(np.std(per_seed[n]) / math.sqrt(max(1, len(per_seed[n])))) for n in ns]
    fit = _fit_loglog(list(ns), means)
    return GapReport(ns=list(ns), mean_gap=means, stderr=errs, per_seed=per_seed,
                     excluded=excluded, exponent=fit.exponent,
                     coefficient=fit.coefficient, residual=fit.residual,
                     label="mst-gap exact-vs-exact")


def tsp_gap_experiment(ns, seeds_per_n: int, base_seed: int = 0, eps: float = 0.2,
                       two_opt_sweeps: int = 60) -> GapReport:
    """Matched-effort heuristic gap: rainbow tour minus 2-opt tour.

    Heuristic-vs-heuristic; directional evidence only, labeled as such.
    """
    from .baselines import tsp_heuristic
    from .tour_greedy import rainbow_tour

    per_seed: dict[int, list[float]] = {}
    excluded: dict[int, int] = {}
    for n in ns:
        gaps = []
        skipped = 0
        q = math.ceil((1.0 + eps) * n)
        for s in range(seeds_per_n):
            seed = SeedSpec(base_seed + 104729 * n + s)
            ins = gen_euclidean(n, seed=seed)
            col = color_edges(edge_count(n), q, seed)
            res = rainbow_tour(ins, col, eps=eps)
            if not res.ok:
                skipped += 1
                continue
            base = tsp_heuristic(ins, max_sweeps=two_opt_sweeps)
            gaps.append(res.tour.total_cost - base.total_cost)
        per_seed[n] = gaps
        excluded[n] = skipped
    means = [float(np.mean(per_seed[n])) for n in ns]
    errs = [float(np.std(per_seed[n]) / math.sqrt(max(1, len(per_seed[n])))) for n in ns]
    fit = _fit_loglog(list(ns), means)
    return GapReport(ns=list(ns), mean_gap=means, stderr=errs, per_seed=per_seed,
                     excluded=excluded, exponent=fit.exponent,
                     coefficient=fit.coefficient, residual=fit.residual,
                     label="tsp-gap heuristic-vs-heuristic (directional)")
