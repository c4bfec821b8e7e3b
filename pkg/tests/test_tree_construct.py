import math

import numpy as np

from rainbowopt import instance as inst
from rainbowopt import tree_construct as tc
from rainbowopt.rainbow_exact import RainbowTree, min_rainbow_spanning_tree


def _mk(n, master, q=None):
    seed = inst.SeedSpec(master)
    ins = inst.gen_euclidean(n, seed=seed)
    col = inst.color_edges(inst.edge_count(n), q or n - 1, seed)
    return ins, col


def test_upward_order_sorted_and_ties():
    pts = np.array([[0.1, 0.3], [0.9, 0.1], [0.5, 0.3], [0.2, 0.9]])
    ins = inst.EuclideanInstance(n=4, points=pts)
    o = tc.build_upward_order(ins)
    assert list(o.order) == [1, 0, 2, 3]  # y=0.1 first; tie at 0.3 by index
    ys = o.points_sorted[:, 1]
    assert (np.diff(ys) >= 0).all()
    # |N(x_i)| = n - 1 - i in sorted ranks
    for i in range(4):
        assert 4 - 1 - i == len(ys) - 1 - i


def test_upward_order_identity_when_sorted():
    pts = np.column_stack([np.zeros(5), np.linspace(0, 1, 5)])
    ins = inst.EuclideanInstance(n=5, points=pts)
    o = tc.build_upward_order(ins)
    assert list(o.order) == list(range(5))


def test_E1_k_shortest_against_full_scan():
    ins, col = _mk(50, 4)
    o = tc.build_upward_order(ins)
    K = 3
    e1 = tc.build_E1(o, col, K)
    pts = o.points_sorted
    by_x = {}
    for g in e1:
        by_x.setdefault(g.x, []).append(g)
    for i in range(49):
        d = np.hypot(pts[i + 1:, 0] - pts[i, 0], pts[i + 1:, 1] - pts[i, 1])
        want = min(K, len(d))
        got = by_x.get(i, [])
        assert len(got) == want
        thresh = np.sort(d)[want - 1]
        for g in got:
            assert g.length <= thresh + 1e-12


def test_E1_boundary_includes_all_edges():
    # n = K + 1: every vertex contributes all upward edges
    n, K = 6, 5
    ins, col = _mk(n, 9)
    o = tc.build_upward_order(ins)
    e1 = tc.build_E1(o, col, K)
    assert len(e1) == inst.edge_count(n)


def test_EA_levels_and_E2_quota():
    n = 200
    ins, col = _mk(n, 12)
    o = tc.build_upward_order(ins)
    K, B = 5, 2.0
    ea, e2 = tc.build_EA_and_E2(o, col, K, B, inst.SeedSpec(12))
    L = tc.level_count(n)
    sq = math.sqrt(n)
    for x, by_level in ea.levels.items():
        for j, (eid, length, upper) in by_level.items():
            assert 1 <= j <= L
            assert B * j**2 / sq <= length < B * (j + 1)**2 / sq
    per_color = {}
    for g in e2:
        per_color[g.color] = per_color.get(g.color, 0) + 1
    assert max(per_color.values()) <= K
    # every E2 edge is an E_A edge of its lower endpoint
    ea_eids = {eid for lv in ea.levels.values() for (eid, _, _) in lv.values()}
    assert all(g.geom_edge in ea_eids for g in e2)


def test_vertex_without_interval_edges_contributes_nothing():
    # two far-apart points: the lower one has its single upward edge below
    # level 1 or beyond level L depending on B; chosen B makes it level-less
    pts = np.array([[0.0, 0.0], [0.0, 1e-9]])
    ins = inst.EuclideanInstance(n=2, points=pts)
    col = inst.Coloring(q=1, colors=np.zeros(1, dtype=np.int64))
    o = tc.build_upward_order(ins)
    ea, e2 = tc.build_EA_and_E2(o, col, 3, 2.0, inst.SeedSpec(0))
    assert ea.members() == [] and e2 == []


def test_match_and_extract_invariants_at_500():
    ok = 0
    for s in range(10):
        ins, col = _mk(500, 100 + s)
        res = tc.construct_tree(ins, col, K=20, B=2.0)
        if res.ok:
            ok += 1
            t = res.tree
            assert len(t.edges) == 499
            assert len(t.colors_used) == 499
            assert abs(sum(ins.cost_array()[t.edges]) - t.total_cost) < 1e-9
    assert ok >= 9


def test_matching_failure_reports_deficiency():
    # all edges share one color: Gamma collapses to one matchable color
    n = 8
    ins = inst.gen_euclidean(n, seed=inst.SeedSpec(3))
    col = inst.Coloring(q=7, colors=np.zeros(inst.edge_count(n), dtype=np.int64))
    res = tc.construct_tree(ins, col, K=3, B=2.0)
    assert not res.ok
    assert res.failure.deficiency == n - 2


def test_construct_dominates_optima():
    from rainbowopt.baselines import kruskal_mst

    for s in range(6):
        n = 40
        ins, col = _mk(n, 500 + s)
        res = tc.construct_tree(ins, col, K=8, B=2.0)
        if not res.ok:
            continue
        assert res.tree.total_cost >= kruskal_mst(ins).total_cost - 1e-12
        exact = min_rainbow_spanning_tree(ins, col)
        if isinstance(exact, RainbowTree):
            assert res.tree.total_cost >= exact.total_cost - 1e-9


def test_gamma_edges_annotated_consistently():
    ins, col = _mk(60, 77)
    o = tc.build_upward_order(ins)
    e1 = tc.build_E1(o, col, 4)
    ea, e2 = tc.build_EA_and_E2(o, col, 4, 2.0, inst.SeedSpec(77))
    pos = o.pos
    for g in e1 + e2:
        a, b = inst.edge_endpoints(g.geom_edge)
        lo, hi = (a, b) if pos[a] < pos[b] else (b, a)
        assert pos[lo] == g.x
        assert int(col.colors[g.geom_edge]) == g.color
        assert abs(ins.edge_cost(a, b) - g.length) < 1e-12


def test_nonstandard_palette_flagged():
    ins, col = _mk(30, 8, q=50)
    res = tc.construct_tree(ins, col, K=6, B=2.0)
    assert res.diagnostics["nonstandard_palette"] is True


def test_gamma_weight_per_sqrt_n_bounded_and_A_large():
    # total Gamma weight / sqrt(n) stays within a mild band over the grid,
    # and |A| covers nearly all points (monitored statistics)
    ratios = []
    for n in (300, 600, 1200):
        ins, col = _mk(n, 5000 + n)
        res = tc.construct_tree(ins, col, K=10, B=2.0)
        d = res.diagnostics
        ratios.append(d["gamma_weight"] / math.sqrt(n))
        assert d["A_size"] >= 0.95 * n
    assert max(ratios) / min(ratios) < 4.0
