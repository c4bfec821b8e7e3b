"""Rainbow Hamilton cycles: greedy path system plus reserve completion.

Set aside r = ceil(C * sqrt(n)) reserve vertices. On the rest, greedily add
the cheapest edge that creates no cycle, no degree-3 vertex and no repeated
color; an edge's color is revealed only when the sweep reaches it, and every
rejection is permanent, so one pass over the cost-sorted edge stream
implements the rule exactly. After n' - 2r accepted edges exactly r path/
isolated components remain. They are closed into a Hamilton cycle through
the reserve using only completion edges whose colors are fresh (unused by
the paths), at most one edge per color, which makes every completion cycle
rainbow by construction. The cycle search is seeded backtracking over the
alternating component/reserve structure (exhaustive order for reserves of
at most 10); failures escalate from the colors-used-exactly-once edge set
through colors-used-at-most-twice to all fresh edges, then re-draw the whole
structure with a rescaled reserve constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .instance import SeedSpec, all_edge_endpoints, edge_id


@dataclass
class GreedyStalled:
    accepted: int
    needed: int


@dataclass
class CompletionFailed:
    restarts: int


@dataclass
class PathSystem:
    """Vertex-disjoint paths plus isolated vertices on the non-reserve set."""

    edges: list[int]            # accepted geometric edge ids
    paths: list[list[int]]      # ordered global vertex sequences, len >= 2
    isolated: list[int]         # global vertex ids
    used_colors: set[int]
    lengths: np.ndarray         # accepted edge lengths in acceptance order
    color_skips: int
    reveals: int


@dataclass
class CompletionGraph:
    """Bipartite structure between path/isolated nodes (with ports) and the
    reserve. ports[x] = (entry, exit) global vertices; equal for isolated."""

    ports: list[tuple[int, int]]
    reserve: list[int]
    edges: list[tuple[int, int, int, int, float, int]]
    # (x index, port side 0/1, y index, geom edge id, cost, color)


@dataclass
class FreshColorFilter:
    fresh_total: int
    once_colors: set[int]
    gamma2: list[tuple[int, int, int, int, float, int]]
    per_color_counts: dict[int, int]


@dataclass
class RainbowTour:
    order: list[int]
    colors: list[int]
    total_cost: float


@dataclass
class TourResult:
    tour: RainbowTour | None
    failure: object | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.tour is not None


def select_reserve(instance, c_param: float):
    """Reserve the first r = ceil(C*sqrt(n)) vertices by index."""
    n = instance.n
    r = math.ceil(c_param * math.sqrt(n))
    if r < 1 or r >= n / 2:
        raise ValueError(f"reserve size r={r} must satisfy 1 <= r < n/2 (n={n})")
    reserve = np.arange(r)
    rest = np.arange(r, n)
    return reserve, rest


@njit(cache=True)
def _greedy_sweep(order, us, vs, color, nprime, q, k0):
    """Single pass over the cost-sorted edge stream. Returns (accepted edge
    positions, #color rejections, #color reveals)."""
    parent = np.arange(nprime)
    deg = np.zeros(nprime, dtype=np.int64)
    used = np.zeros(q, dtype=np.bool_)
    accepted = np.empty(k0, dtype=np.int64)
    na = 0
    skips = 0
    reveals = 0
    for t in range(order.shape[0]):
        if na == k0:
            break
        e = order[t]
        u = us[e]
        v = vs[e]
        if deg[u] >= 2 or deg[v] >= 2:
            continue
        ru = u
        while parent[ru] != ru:
            parent[ru] = parent[parent[ru]]
            ru = parent[ru]
        rv = v
        while parent[rv] != rv:
            parent[rv] = parent[parent[rv]]
            rv = parent[rv]
        if ru == rv:
            continue
        reveals += 1
        c = color[e]
        if used[c]:
            skips += 1
            continue
        used[c] = True
        parent[ru] = rv
        deg[u] += 1
        deg[v] += 1
        accepted[na] = e
        na += 1
    return accepted[:na], skips, reveals


def greedy_paths(instance, coloring, rest: np.ndarray, k0: int):
    """Grow the rainbow path system on the non-reserve vertices."""
    nprime = len(rest)
    base = int(rest[0])  # rest is contiguous [r, n)
    lu, lv = all_edge_endpoints(nprime)
    gu = lu + base
    gv = lv + base
    geids = gv * (gv - 1) // 2 + gu
    costs = instance.cost_array()[geids]
    cols = coloring.colors[geids]
    order = np.lexsort((geids, costs))
    acc, skips, reveals = _greedy_sweep(order, lu, lv, cols, nprime, coloring.q, k0)
    if len(acc) < k0:
        return GreedyStalled(accepted=len(acc), needed=k0)
    # assemble components
    adj: dict[int, list[int]] = {}
    for e in acc:
        a, b = int(gu[e]), int(gv[e])
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = set()
    paths = []
    for v in sorted(adj):
        if v in seen or len(adj[v]) != 1:
            continue
        walk = [v]
        seen.add(v)
        cur, prev = v, -1
        while True:
            nxts = [w for w in adj[cur] if w != prev]
            if not nxts:
                break
            prev, cur = cur, nxts[0]
            walk.append(cur)
            seen.add(cur)
        paths.append(walk)
    isolated = [int(v) for v in rest if int(v) not in adj]
    return PathSystem(edges=[int(geids[e]) for e in acc],
                      paths=paths,
                      isolated=isolated,
                      used_colors={int(cols[e]) for e in acc},
                      lengths=costs[acc],
                      color_skips=int(skips),
                      reveals=int(reveals))


def build_completion(paths: PathSystem, reserve: np.ndarray, instance, coloring):
    """Relevant reserve-crossing edges, and the filter keeping fresh colors
    used exactly once."""
    ports: list[tuple[int, int]] = []
    for p in paths.paths:
        ports.append((p[0], p[-1]))
    for v in paths.isolated:
        ports.append((v, v))
    reserve = [int(y) for y in reserve]
    cols = coloring.colors
    edges = []
    for xi, (a, b) in enumerate(ports):
        sides = ((0, a), (1, b)) if a != b else ((0, a),)
        for side, vtx in sides:
            for yi, y in enumerate(reserve):
                eid = edge_id(vtx, y)
                edges.append((xi, side, yi, eid, instance.edge_cost(vtx, y),
                              int(cols[eid])))
    graph = CompletionGraph(ports=ports, reserve=reserve, edges=edges)

    counts: dict[int, int] = {}
    fresh_total = 0
    for (_, _, _, _, _, c) in edges:
        if c not in paths.used_colors:
            fresh_total += 1
            counts[c] = counts.get(c, 0) + 1
    once = {c for c, k in counts.items() if k == 1}
    gamma2 = [e for e in edges if e[5] in once]
    filt = FreshColorFilter(fresh_total=fresh_total, once_colors=once,
                            gamma2=gamma2, per_color_counts=counts)
    return graph, filt


def _one_per_color_relaxed(graph: CompletionGraph, used_colors, max_uses: int):
    """Fallback edge set: fresh colors used <= max_uses, one edge per color,
    so the completion stays rainbow by construction.

    Among a color's candidates the kept edge is chosen to cover the port
    currently covered least (scarcest colors decided first, ties by cost then
    edge id); empty ports, not total density, are what kill the cycle search.
    """
    groups: dict[int, list] = {}
    for e in graph.edges:
        c = e[5]
        if c in used_colors:
            continue
        groups.setdefault(c, []).append(e)
    coverage: dict[tuple[int, int], int] = {}
    for xi, (a, b) in enumerate(graph.ports):
        coverage[(xi, 0)] = 0
        if a != b:
            coverage[(xi, 1)] = 0
    keep = []
    for c in sorted(groups, key=lambda c: (len(groups[c]), c)):
        cands = groups[c]
        if len(cands) > max_uses:
            continue
        best = min(cands, key=lambda e: (coverage[(e[0], e[1])], e[4], e[3]))
        coverage[(best[0], best[1])] += 1
        keep.append(best)
    return keep


def _cycle_search(nx: int, ny: int, gamma2, two_port, rng, max_steps: int,
                  exhaustive: bool):
    """Hamilton cycle alternating X (ported) and Y nodes inside gamma2.

    Encoded as (ys, xs, sides): xs[k] links ys[k] -> ys[k+1 mod r], entered
    at port sides[k]. Single-port nodes exit at their only port through a
    different edge. Backtracking with most-constrained-first value ordering;
    deterministic exhaustive order when `exhaustive`, otherwise randomized
    by rng under a node budget. Returns None on failure.
    """
    if ny == 0 or nx != ny:
        return None
    # adjacency: (x, side) -> [(y, color)];  y -> [(x, side)]
    adj_x = [[[], []] for _ in range(nx)]
    adj_y = [[] for _ in range(ny)]
    entry_color = {}
    for (x, side, y, eid, cost, c) in gamma2:
        adj_x[x][side].append((y, c))
        adj_y[y].append((x, side))
        entry_color[(x, side, y)] = c
    ydeg = [len(a) for a in adj_y]

    used_x = [False] * nx
    used_y = [False] * ny
    used_c: set[int] = set()
    start = 0 if exhaustive else int(rng.integers(ny))
    ys = [start]
    used_y[start] = True
    xs: list[int] = []
    sides: list[int] = []
    budget = [max(max_steps, 10000)]

    def options(cur, closing):
        opts = []
        for (x, side) in adj_y[cur]:
            if used_x[x]:
                continue
            c_in = entry_color[(x, side, cur)]
            if c_in in used_c:
                continue
            out = _exit_side(two_port, x, side)
            for (y2, c_out) in adj_x[x][out]:
                if c_out in used_c or c_out == c_in:
                    continue
                if closing:
                    if y2 == ys[0] and (two_port[x] or y2 != cur):
                        opts.append((0, 0.0, x, side, y2, c_in, c_out))
                elif not used_y[y2]:
                    jitter = 0.0 if exhaustive else float(rng.random())
                    opts.append((ydeg[y2], jitter, x, side, y2, c_in, c_out))
        opts.sort()
        return opts

    def rec():
        if budget[0] <= 0:
            return False
        budget[0] -= 1
        cur = ys[-1]
        closing = len(ys) == ny
        for (_, _, x, side, y2, c_in, c_out) in options(cur, closing):
            if closing:
                xs.append(x)
                sides.append(side)
                used_c.add(c_in)
                used_c.add(c_out)
                return True
            used_x[x] = True
            used_y[y2] = True
            used_c.add(c_in)
            used_c.add(c_out)
            xs.append(x)
            sides.append(side)
            ys.append(y2)
            if rec():
                return True
            ys.pop()
            sides.pop()
            xs.pop()
            used_x[x] = False
            used_y[y2] = False
            used_c.discard(c_in)
            used_c.discard(c_out)
        return False

    if rec():
        return ys, xs, sides
    return None


def _exit_side(two_port, x, side):
    return 1 - side if two_port[x] else side


def complete_hamilton(graph: CompletionGraph, filt_edges, paths: PathSystem,
                      coloring, seed: SeedSpec, restarts: int = 50,
                      steps_per_restart: int | None = None):
    """Close the path system into a rainbow Hamilton cycle, or fail."""
    nx = len(graph.ports)
    ny = len(graph.reserve)
    if nx != ny:
        raise ValueError(f"completion needs |X| == |Y|, got {nx} != {ny}")
    n_total = sum(len(p) for p in paths.paths) + len(paths.isolated) + ny
    cap = steps_per_restart if steps_per_restart is not None else 10 * n_total
    two_port = [a != b for (a, b) in graph.ports]
    exhaustive_first = ny <= 10
    found = None
    tried = 0
    for attempt in range(max(1, restarts)):
        rng = seed.rng("tiebreak", 1, attempt)
        found = _cycle_search(nx, ny, filt_edges, two_port, rng, cap,
                              exhaustive_first and attempt == 0)
        tried = attempt + 1
        if found is not None:
            break
    if found is None:
        return CompletionFailed(restarts=tried)
    ys, xs, sides = found
    # stitch: y_0 -> x_1 traversed entry->exit -> y_1 -> ...
    edge_map = {}
    for (x, side, y, eid, cost, c) in filt_edges:
        edge_map[(x, side, y)] = eid
    order: list[int] = []
    colors: list[int] = []
    cols = coloring.colors
    for k in range(len(xs)):
        y_prev = ys[k]
        y_next = ys[(k + 1) % len(ys)]
        x = xs[k]
        entry = sides[k]
        order.append(graph.reserve[y_prev])
        seq = _port_sequence(paths, x, entry)
        e_in = edge_map[(x, entry, y_prev)]
        e_out = edge_map[(x, _exit_side(two_port, x, entry), y_next)]
        colors.append(int(cols[e_in]))
        order.extend(seq)
        for a, b in zip(seq, seq[1:]):
            colors.append(int(cols[edge_id(a, b)]))
        colors.append(int(cols[e_out]))
    return order, colors


def _port_sequence(paths: PathSystem, x: int, entry_side: int) -> list[int]:
    """X node index -> its internal vertex sequence, oriented by entry port."""
    if x < len(paths.paths):
        p = paths.paths[x]
        return list(p) if entry_side == 0 else list(reversed(p))
    return [paths.isolated[x - len(paths.paths)]]


def _ports_covered(graph: CompletionGraph, edges) -> bool:
    """Cheap structural precheck: every port needs an edge (two for the
    single port of an isolated node) or no Hamilton completion exists."""
    deg: dict[tuple[int, int], int] = {}
    for e in edges:
        deg[(e[0], e[1])] = deg.get((e[0], e[1]), 0) + 1
    for xi, (a, b) in enumerate(graph.ports):
        if a != b:
            if deg.get((xi, 0), 0) < 1 or deg.get((xi, 1), 0) < 1:
                return False
        elif deg.get((xi, 0), 0) < 2:
            return False
    return True


# Reserve-constant multipliers tried on failure; each value re-draws the
# whole reserve/greedy/completion structure, so attempts are near-independent.
_C_LADDER = (1.0, 1.25, 0.8, 1.55, 0.65, 1.9, 2.35, 0.5)


def rainbow_tour(instance, coloring, eps: float = 0.2, c_param: float = 0.9,
                 budget: int = 50) -> TourResult:
    """End-to-end rainbow Hamilton cycle pipeline with retries.

    Requires a palette of at least ceil((1+eps) n) colors. A stalled greedy
    or failed completion is retried with a rescaled reserve constant; a
    failed completion first re-seeds the cycle search, then relaxes the
    color filter from fresh-used-exactly-once to fresh-used-at-most-twice
    and finally to any fresh color, always taking one edge per color so
    every completion stays rainbow by construction.
    """
    n = instance.n
    need_q = math.ceil((1.0 + eps) * n)
    if coloring.q < need_q:
        raise ValueError(f"palette q={coloring.q} below ceil((1+eps)n)={need_q}")
    seed = SeedSpec(instance.master_seed)
    diag: dict = {"n": n, "eps": eps, "retries": 0, "fallback_relaxed": 0}
    last_failure: object | None = None
    for attempt, mult in enumerate(_C_LADDER):
        c_cur = c_param * mult
        try:
            reserve, rest = select_reserve(instance, c_cur)
        except ValueError:
            continue
        r = len(reserve)
        k0 = len(rest) - r
        if k0 <= 0:
            continue
        paths = greedy_paths(instance, coloring, rest, k0)
        if isinstance(paths, GreedyStalled):
            last_failure = paths
            diag["retries"] += 1
            continue
        diag.update(r=r, k0=k0, c_param=c_cur, color_skips=paths.color_skips,
                    reveals=paths.reveals,
                    greedy_cost=float(paths.lengths.sum()))
        # monitored availability statistic, in instance units
        scale = getattr(instance, "scale", 1.0)
        nprime = len(rest)
        lam = c_cur * math.sqrt(n) / (nprime - np.arange(1, k0 + 1)) * scale
        diag["lambda_exceed_frac"] = float(np.mean(paths.lengths > lam)) if k0 else 0.0
        graph, filt = build_completion(paths, reserve, instance, coloring)
        diag["gamma2_size"] = len(filt.gamma2)
        diag["fresh_edges"] = filt.fresh_total
        all_fresh = [e for e in graph.edges if e[5] not in paths.used_colors]
        res = CompletionFailed(restarts=0)
        for stage, edges in enumerate((
                filt.gamma2,
                _one_per_color_relaxed(graph, paths.used_colors, 2),
                all_fresh)):
            if not _ports_covered(graph, edges):
                continue
            if stage > 0:
                diag["fallback_relaxed"] = max(diag["fallback_relaxed"], stage)
            res = complete_hamilton(graph, edges, paths, coloring, seed,
                                    restarts=budget)
            if not isinstance(res, CompletionFailed):
                break
        if isinstance(res, CompletionFailed):
            last_failure = res
            diag["retries"] += 1
            continue
        order, colors = res
        tour = _verified_tour(instance, order, colors)
        diag["completion_cost"] = tour.total_cost - float(paths.lengths.sum())
        diag["attempts"] = attempt + 1
        return TourResult(tour=tour, failure=None, diagnostics=diag)
    return TourResult(tour=None, failure=last_failure, diagnostics=diag)


def _verified_tour(instance, order: list[int], colors: list[int]) -> RainbowTour:
    n = instance.n
    if sorted(order) != list(range(n)):
        raise AssertionError("completion produced a non-permutation")
    if len(colors) != n or len(set(colors)) != n:
        raise AssertionError("completion reused a color")
    cost = 0.0
    for k in range(n):
        cost += instance.edge_cost(order[k], order[(k + 1) % n])
    return RainbowTour(order=list(order), colors=list(colors), total_cost=cost)
