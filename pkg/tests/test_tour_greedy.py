import math

import numpy as np
import pytest

from rainbowopt import instance as inst
from rainbowopt import tour_greedy as tg


def _mk(n, master, eps=0.2):
    seed = inst.SeedSpec(master)
    ins = inst.gen_euclidean(n, seed=seed)
    q = math.ceil((1 + eps) * n)
    col = inst.color_edges(inst.edge_count(n), q, seed)
    return ins, col


def test_select_reserve_partition():
    ins, _ = _mk(100, 0)
    reserve, rest = tg.select_reserve(ins, 1.0)
    assert len(reserve) == 10 and len(rest) == 90
    assert set(reserve) | set(rest) == set(range(100))
    assert set(reserve) & set(rest) == set()
    with pytest.raises(ValueError):
        tg.select_reserve(ins, 6.0)  # r >= n/2


def test_greedy_invariants_and_component_count():
    n = 300
    ins, col = _mk(n, 5)
    reserve, rest = tg.select_reserve(ins, 1.0)
    r = len(reserve)
    k0 = len(rest) - r
    paths = tg.greedy_paths(ins, col, rest, k0)
    assert isinstance(paths, tg.PathSystem)
    # r components among the non-reserve vertices
    assert len(paths.paths) + len(paths.isolated) == r
    assert len(paths.edges) == k0
    assert len(paths.used_colors) == k0  # all colors distinct
    deg = {}
    for e in paths.edges:
        a, b = inst.edge_endpoints(e)
        deg[a] = deg.get(a, 0) + 1
        deg[b] = deg.get(b, 0) + 1
    assert max(deg.values()) <= 2
    # lengths nondecreasing is NOT required (availability changes), but all
    # accepted edges stay inside the non-reserve set
    rest_set = set(int(v) for v in rest)
    for e in paths.edges:
        a, b = inst.edge_endpoints(e)
        assert a in rest_set and b in rest_set


def test_greedy_first_step_takes_cheapest_fresh():
    n = 40
    ins, col = _mk(n, 9)
    reserve, rest = tg.select_reserve(ins, 1.0)
    paths = tg.greedy_paths(ins, col, rest, 1)
    base = int(rest[0])
    lu, lv = inst.all_edge_endpoints(len(rest))
    geids = (lv + base) * (lv + base - 1) // 2 + (lu + base)
    costs = ins.cost_array()[geids]
    cheapest = geids[np.argmin(costs)]
    assert paths.edges == [int(cheapest)]


def test_completion_graph_shape_and_filter():
    n = 400
    ins, col = _mk(n, 11)
    reserve, rest = tg.select_reserve(ins, 1.0)
    r = len(reserve)
    paths = tg.greedy_paths(ins, col, rest, len(rest) - r)
    graph, filt = tg.build_completion(paths, reserve, ins, col)
    assert len(graph.ports) == r == len(graph.reserve)
    # gamma2: every color appears exactly once and is fresh
    seen = {}
    for (_, _, _, _, _, c) in filt.gamma2:
        assert c not in paths.used_colors
        seen[c] = seen.get(c, 0) + 1
    assert all(v == 1 for v in seen.values())
    assert set(seen) == filt.once_colors


def test_tiny_exhaustive_completion():
    # one 2-path + one isolated vertex, reserve of 2: 4-cycle through B
    pts = np.array([
        [0.45, 0.0], [0.55, 0.0],      # reserve (indices 0,1)
        [0.2, 0.5], [0.3, 0.5],        # path
        [0.7, 0.5],                    # isolated
    ])
    ins = inst.EuclideanInstance(n=5, points=pts, master_seed=1)
    m = inst.edge_count(5)
    col = inst.Coloring(q=m, colors=np.arange(m, dtype=np.int64))  # all distinct
    paths = tg.PathSystem(edges=[inst.edge_id(2, 3)], paths=[[2, 3]],
                          isolated=[4], used_colors={int(col.colors[inst.edge_id(2, 3)])},
                          lengths=np.array([0.1]), color_skips=0, reveals=1)
    graph, filt = tg.build_completion(paths, np.array([0, 1]), ins, col)
    res = tg.complete_hamilton(graph, filt.gamma2, paths, col,
                               inst.SeedSpec(1), restarts=5)
    assert not isinstance(res, tg.CompletionFailed)
    order, colors = res
    assert sorted(order) == list(range(5))
    assert len(set(colors)) == 5


def test_rainbow_tour_end_to_end():
    for s in (1, 2, 3):
        n = 300
        ins, col = _mk(n, 1000 + s)
        res = tg.rainbow_tour(ins, col, eps=0.2)
        assert res.ok, res.failure
        t = res.tour
        assert sorted(t.order) == list(range(n))
        assert len(set(t.colors)) == n
        recomputed = sum(ins.edge_cost(t.order[k], t.order[(k + 1) % n])
                         for k in range(n))
        assert abs(recomputed - t.total_cost) <= 1e-9 * max(1.0, recomputed)


def test_rainbow_tour_colors_match_edges():
    n = 200
    ins, col = _mk(n, 77)
    res = tg.rainbow_tour(ins, col, eps=0.2)
    assert res.ok
    t = res.tour
    for k in range(n):
        e = inst.edge_id(t.order[k], t.order[(k + 1) % n])
        assert int(col.colors[e]) == t.colors[k]


def test_adversarial_line_instance():
    n = 250
    pts = np.column_stack([np.linspace(0, 1, n), np.zeros(n)])
    ins = inst.EuclideanInstance(n=n, points=pts, master_seed=13)
    col = inst.color_edges(inst.edge_count(n), math.ceil(1.2 * n), inst.SeedSpec(13))
    res = tg.rainbow_tour(ins, col, eps=0.2)
    assert res.ok


def test_rainbow_tour_beats_exact_lower_bound():
    from rainbowopt.baselines import tsp_exact

    hits = 0
    for s in range(8):
        n = 12
        ins, col = _mk(n, 400 + s)
        res = tg.rainbow_tour(ins, col, eps=0.2, c_param=0.45)
        if res.ok:
            hits += 1
            assert res.tour.total_cost >= tsp_exact(ins).total_cost - 1e-9
    assert hits >= 1


def test_palette_guard():
    n = 100
    ins, _ = _mk(n, 3)
    small = inst.color_edges(inst.edge_count(n), n, inst.SeedSpec(3))
    with pytest.raises(ValueError):
        tg.rainbow_tour(ins, small, eps=0.2)


def test_completion_cost_bounded_by_reserve_size():
    n = 400
    ins, col = _mk(n, 21)
    res = tg.rainbow_tour(ins, col, eps=0.2)
    assert res.ok
    d = res.diagnostics
    # 2r completion edges of length <= sqrt(2) each, at scale 1
    assert d["completion_cost"] <= 2 * d["r"] * math.sqrt(2) + 1e-9


def test_per_color_usage_upper_bound():
    # expected uses of a particular fresh color among completion edges is
    # at most 2 r^2 / q'; checked as an upper bound over seeds
    for s in range(3):
        n = 2000
        ins, col = _mk(n, 3200 + s)
        reserve, rest = tg.select_reserve(ins, 0.9)
        r = len(reserve)
        paths = tg.greedy_paths(ins, col, rest, len(rest) - r)
        assert isinstance(paths, tg.PathSystem)
        graph, filt = tg.build_completion(paths, reserve, ins, col)
        q_fresh = col.q - len(paths.used_colors)
        lam = 2 * r * r / q_fresh
        used = [c for c in filt.per_color_counts.values()]
        mean_usage = (sum(used) / q_fresh) if q_fresh else 0.0
        assert mean_usage <= lam * 1.2
