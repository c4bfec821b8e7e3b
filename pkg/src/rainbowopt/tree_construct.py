"""Constructive cheap rainbow spanning trees via bipartite matching.

Order the points by increasing second coordinate. Every non-top point must
pick one edge going strictly upward, so any system of distinct (point, color)
choices where the color is realized by an upward edge is automatically an
acyclic spanning edge set with distinct colors. The bipartite graph Gamma on
(non-top points) x (colors) carries two edge families:

  E1: per point, the colors of its K shortest upward edges (all upward edges
      for the top K points);
  E2: per color, the lower endpoints of the K lowest-level edges of that
      color inside E_A, where E_A holds, per point and per length level
      [B j^2 / sqrt(n), B (j+1)^2 / sqrt(n)), one (the shortest) qualifying
      upward edge; ties within a level are broken by a per-(color, level)
      random ordering drawn from the instance's tie-break substream.

A perfect matching of Gamma yields the tree; its absence is reported as
MatchingFailed with the deficiency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .instance import SeedSpec, edge_id
from .rainbow_exact import RainbowTree


@dataclass
class UpwardOrder:
    """Vertices sorted by (second coordinate, index); order[k] is the
    original index of the k-th lowest point."""

    order: np.ndarray
    pos: np.ndarray  # inverse permutation
    points_sorted: np.ndarray


@dataclass
class GammaEdge:
    x: int        # sorted rank of the lower endpoint
    color: int
    geom_edge: int  # edge id in the instance
    length: float


@dataclass
class LevelEdgeSet:
    """E_A: chosen upward edge per (point, level); `levels` maps sorted rank
    -> {level: (geom edge id, length, upper rank)}."""

    levels: dict[int, dict[int, tuple[int, float, int]]]
    level_count: int

    def members(self) -> list[int]:
        return [x for x, lv in self.levels.items() if lv]


@dataclass
class MatchingFailed:
    deficiency: int
    matched: int


@dataclass
class ConstructResult:
    tree: RainbowTree | None
    failure: MatchingFailed | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.tree is not None


def build_upward_order(instance) -> UpwardOrder:
    if instance.n < 2:
        raise ValueError("need n >= 2")
    pts = instance.points
    order = np.lexsort((np.arange(instance.n), pts[:, 1]))
    pos = np.empty(instance.n, dtype=np.int64)
    pos[order] = np.arange(instance.n)
    return UpwardOrder(order=order, pos=pos, points_sorted=pts[order])


def _level_of(lengths: np.ndarray, n: int, B: float) -> np.ndarray:
    """Level j with length in [B j^2/sqrt(n), B (j+1)^2/sqrt(n)); 0 = below level 1."""
    return np.floor(np.sqrt(lengths * math.sqrt(n) / B)).astype(np.int64)


def level_count(n: int) -> int:
    return max(1, math.ceil(math.log(n) ** 2))


def build_E1(order: UpwardOrder, coloring, K: int) -> list[GammaEdge]:
    """Colors of the K shortest upward edges per point (all edges for the
    top K points). Multi-edges are retained."""
    if K < 1:
        raise ValueError("K must be >= 1")
    pts = order.points_sorted
    n = len(pts)
    out = []
    for i in range(n - 1):
        d = np.hypot(pts[i + 1:, 0] - pts[i, 0], pts[i + 1:, 1] - pts[i, 1])
        s = len(d)
        if s <= K:
            picks = np.argsort(d, kind="stable")
        else:
            part = np.argpartition(d, K - 1)[:K]
            picks = part[np.argsort(d[part], kind="stable")]
        for k in picks:
            j = i + 1 + int(k)
            eid = edge_id(int(order.order[i]), int(order.order[j]))
            out.append(GammaEdge(x=i, color=int(coloring.colors[eid]),
                                 geom_edge=eid, length=float(d[k])))
    return out


def build_EA_and_E2(order: UpwardOrder, coloring, K: int, B: float,
                    seed: SeedSpec) -> tuple[LevelEdgeSet, list[GammaEdge]]:
    """E_A (shortest qualifying upward edge per point per level) and the
    per-color quota selection E2."""
    if B <= 0:
        raise ValueError("B must be positive")
    pts = order.points_sorted
    n = len(pts)
    L = level_count(n)
    levels: dict[int, dict[int, tuple[int, float, int]]] = {}
    ea_rows = []  # (color, level, x, geom_edge, length)
    for i in range(n - 1):
        d = np.hypot(pts[i + 1:, 0] - pts[i, 0], pts[i + 1:, 1] - pts[i, 1])
        lev = _level_of(d, n, B)
        valid = (lev >= 1) & (lev <= L)
        mine: dict[int, tuple[int, float, int]] = {}
        if valid.any():
            dv = d[valid]
            lv = lev[valid]
            kv = np.flatnonzero(valid)
            sortidx = np.lexsort((kv, dv, lv))
            lv_sorted = lv[sortidx]
            firsts = np.flatnonzero(np.r_[True, lv_sorted[1:] != lv_sorted[:-1]])
            for f in firsts:
                k = int(kv[sortidx[f]])
                j = i + 1 + k
                eid = edge_id(int(order.order[i]), int(order.order[j]))
                entry = (eid, float(d[k]), j)
                mine[int(lv_sorted[f])] = entry
                ea_rows.append((int(coloring.colors[eid]), int(lv_sorted[f]), i,
                                eid, float(d[k])))
        levels[i] = mine
    ea = LevelEdgeSet(levels=levels, level_count=L)

    # E2: per color, the K lowest-level E_A edges; ties inside one level are
    # ordered by a random permutation drawn independently per (color, level).
    e2 = []
    ea_rows.sort()
    idx = 0
    while idx < len(ea_rows):
        c = ea_rows[idx][0]
        group = []
        while idx < len(ea_rows) and ea_rows[idx][0] == c:
            group.append(ea_rows[idx])
            idx += 1
        chosen = []
        lpos = 0
        while lpos < len(group) and len(chosen) < K:
            lev = group[lpos][1]
            block = []
            while lpos < len(group) and group[lpos][1] == lev:
                block.append(group[lpos])
                lpos += 1
            perm = seed.rng("tiebreak", 0, c, lev).permutation(len(block))
            for bk in perm:
                if len(chosen) >= K:
                    break
                chosen.append(block[bk])
        for (_, lev, x, eid, length) in chosen:
            e2.append(GammaEdge(x=x, color=c, geom_edge=eid, length=length))
    return ea, e2


@njit(cache=True)
def _hopcroft_karp(nl, nr, adj_off, adj_to):
    """Maximum bipartite matching; BFS layering + layered DFS augmenting."""
    match_l = np.full(nl, -1, dtype=np.int64)
    match_r = np.full(nr, -1, dtype=np.int64)
    dist = np.empty(nl, dtype=np.int64)
    queue = np.empty(nl, dtype=np.int64)
    it_pos = np.empty(nl, dtype=np.int64)
    stack = np.empty(nl + 1, dtype=np.int64)
    choice = np.empty(nl + 1, dtype=np.int64)
    total = 0
    while True:
        qt = 0
        for u in range(nl):
            if match_l[u] < 0:
                dist[u] = 0
                queue[qt] = u
                qt += 1
            else:
                dist[u] = -1
        qh = 0
        found = False
        while qh < qt:
            u = queue[qh]
            qh += 1
            for it in range(adj_off[u], adj_off[u + 1]):
                w = match_r[adj_to[it]]
                if w < 0:
                    found = True
                elif dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue[qt] = w
                    qt += 1
        if not found:
            break
        for u0 in range(nl):
            if match_l[u0] >= 0 or dist[u0] != 0:
                continue
            depth = 0
            stack[0] = u0
            it_pos[u0] = adj_off[u0]
            while depth >= 0:
                u = stack[depth]
                descended = False
                while it_pos[u] < adj_off[u + 1]:
                    v = adj_to[it_pos[u]]
                    it_pos[u] += 1
                    w = match_r[v]
                    if w < 0:
                        choice[depth] = v
                        for lv in range(depth, -1, -1):
                            uu = stack[lv]
                            vv = choice[lv]
                            match_l[uu] = vv
                            match_r[vv] = uu
                        total += 1
                        depth = -1
                        descended = True
                        break
                    if dist[w] == dist[u] + 1:
                        choice[depth] = v
                        depth += 1
                        stack[depth] = w
                        it_pos[w] = adj_off[w]
                        descended = True
                        break
                if not descended:
                    dist[u] = -1
                    depth -= 1
    return match_l, match_r, total


def match_and_extract(gamma: list[GammaEdge], n: int, order: UpwardOrder,
                      coloring) -> RainbowTree | MatchingFailed:
    """Maximum matching on Gamma; perfect (size n-1) => rainbow spanning tree."""
    best: dict[tuple[int, int], tuple[float, int]] = {}
    for ge in gamma:
        key = (ge.x, ge.color)
        cur = best.get(key)
        if cur is None or (ge.length, ge.geom_edge) < cur:
            best[key] = (ge.length, ge.geom_edge)
    nl = n - 1
    nr = coloring.q
    xs = np.fromiter((k[0] for k in best), dtype=np.int64, count=len(best))
    cs = np.fromiter((k[1] for k in best), dtype=np.int64, count=len(best))
    ws = np.fromiter((v[0] for v in best.values()), dtype=np.float64, count=len(best))
    # shortest annotations first: augmenting paths then prefer cheap edges,
    # which keeps the (cardinality) matching from wasting long level edges
    sortidx = np.lexsort((cs, ws, xs))
    xs = xs[sortidx]
    cs = cs[sortidx]
    counts = np.bincount(xs, minlength=nl)
    adj_off = np.zeros(nl + 1, dtype=np.int64)
    np.cumsum(counts, out=adj_off[1:])
    match_l, match_r, total = _hopcroft_karp(nl, nr, adj_off, cs)
    if total < nl:
        return MatchingFailed(deficiency=nl - total, matched=total)
    edges = []
    colors_used = set()
    cost = 0.0
    for x in range(nl):
        c = int(match_l[x])
        length, eid = best[(x, c)]
        edges.append(eid)
        colors_used.add(c)
        cost += length
    # one upward parent per non-top point is acyclic by construction; verify
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    from .instance import edge_endpoints
    for eid in edges:
        a, b = edge_endpoints(eid)
        ra, rb = find(a), find(b)
        if ra == rb:
            raise AssertionError("matching produced a cycle; construction invariant broken")
        parent[ra] = rb
    return RainbowTree(edges=sorted(edges), colors_used=colors_used,
                       total_cost=cost)


def construct_tree(instance, coloring, K: int = 20, B: float = 2.0) -> ConstructResult:
    """Full pipeline: order, E1, E_A/E2, Gamma, matching, tree."""
    n = instance.n
    if n < 2:
        raise ValueError("need n >= 2")
    order = build_upward_order(instance)
    seed = SeedSpec(instance.master_seed)
    e1 = build_E1(order, coloring, K)
    ea, e2 = build_EA_and_E2(order, coloring, K, B, seed)
    gamma = e1 + e2
    diag = {
        "n": n,
        "K": K,
        "B": B,
        "E1_size": len(e1),
        "E2_size": len(e2),
        "gamma_weight": float(sum(g.length for g in gamma)),
        "A_size": len(ea.members()),
        "level_count": ea.level_count,
        "nonstandard_palette": bool(coloring.q != n - 1),
    }
    res = match_and_extract(gamma, n, order, coloring)
    if isinstance(res, MatchingFailed):
        diag["matching_size"] = res.matched
        return ConstructResult(tree=None, failure=res, diagnostics=diag)
    diag["matching_size"] = n - 1
    diag["cost"] = res.total_cost
    return ConstructResult(tree=res, failure=None, diagnostics=diag)
