"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. The heavy experiments
(criteria 3-7) flow through the harness so their CSV artifacts land in the
pytest tmp dir; the determinism criterion re-runs representative configs
under different worker counts and compares bytes.
"""

import math
import os

import numpy as np
import pytest

from rainbowopt import baselines as bl
from rainbowopt import colorstats as cs
from rainbowopt import harness as hs
from rainbowopt import instance as inst
from rainbowopt import rainbow_exact as rx


def _report(num, name, ok, detail):
    print(f"\nACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} {name}: {detail}"


def test_c01_exact_solver_matches_bruteforce_oracle():
    rng = np.random.default_rng(1)
    mismatches = 0
    for trial in range(500):
        n = int(rng.integers(3, 8))
        q = (n - 1, n, 2 * n)[trial % 3]
        seed = inst.SeedSpec(int(rng.integers(2**60)))
        ins = (inst.gen_uniform_costs(n, seed) if trial % 2
               else inst.gen_euclidean(n, seed=seed))
        col = inst.color_edges(inst.edge_count(n), q, seed)
        got = rx.min_rainbow_spanning_tree(ins, col)
        want = rx.brute_rainbow_degree_bounded_mst(ins, col, n - 1)
        feas_g = isinstance(got, rx.RainbowTree)
        feas_w = isinstance(want, rx.RainbowTree)
        if feas_g != feas_w:
            mismatches += 1
        elif feas_g and abs(got.total_cost - want.total_cost) > 0:
            # identical edge multisets sum identically; require exact equality
            if sorted(got.edges) != sorted(want.edges) and \
                    abs(got.total_cost - want.total_cost) > 1e-12:
                mismatches += 1
    _report(1, "exact-rainbow-mst-oracle-equivalence", mismatches == 0,
            f"500 instances, {mismatches} mismatches")


def test_c02_zeta3_baseline():
    costs = []
    for s in range(100):
        ins = inst.gen_uniform_costs(300, inst.SeedSpec(20000 + s))
        costs.append(bl.kruskal_mst(ins).total_cost)
    mean = float(np.mean(costs))
    target = bl.zeta3()
    ok = abs(mean - target) <= 0.05
    _report(2, "uniform-mst-zeta3", ok,
            f"mean={mean:.4f} vs zeta(3)={target:.4f}, tol 0.05")


def test_c03_rainbow_mst_bounded_trend(tmp_path):
    ns = [50, 100, 200, 400, 800]
    cfg = hs.ExperimentConfig(kind="rainbow-mst-trend", ns=ns, seeds=100,
                              out=str(tmp_path / "trend.csv"), base_seed=100)
    _, summary = hs.run_experiment(cfg)
    means = summary["mean_cost"]
    in_band = all(means[n] is not None and 1.0 <= means[n] <= 4.0 for n in ns)
    ratio = means[800] / means[100]
    ok = in_band and ratio <= 1.25
    _report(3, "rainbow-mst-O1-trend", ok,
            f"means={[round(means[n], 3) for n in ns]}, "
            f"mean(800)/mean(100)={ratio:.3f} (band [1,4], ratio<=1.25)")


def test_c04_tree_construction_scaling(tmp_path):
    ns = [500, 1000, 2000, 4000]
    cfg = hs.ExperimentConfig(kind="tree-construct", ns=ns, seeds=30,
                              out=str(tmp_path / "construct.csv"),
                              base_seed=200, params={"K": 20, "B": 2.0})
    records, summary = hs.run_experiment(cfg)
    succ = summary["success_rate"]
    rate_ok = all(succ[n] >= 0.95 for n in ns if n >= 1000)
    norm = {n: summary["mean_cost"][n] / math.sqrt(n) for n in ns
            if summary["mean_cost"][n] is not None}
    band = max(norm.values()) / min(norm.values())
    ok = rate_ok and band < 2.0
    _report(4, "tree-construct-sqrt-n-band", ok,
            f"success={ {n: round(succ[n], 3) for n in ns} }, "
            f"cost/sqrt(n)={ {n: round(v, 3) for n, v in norm.items()} }, "
            f"band={band:.3f} (<2)")


def test_c05_mst_gap_scaling(tmp_path):
    ns = [100, 200, 400, 800]
    cfg = hs.ExperimentConfig(kind="mst-gap", ns=ns, seeds=30,
                              out=str(tmp_path / "mstgap.csv"), base_seed=300)
    records, summary = hs.run_experiment(cfg)
    by_cell = {}
    for r in records:
        by_cell.setdefault((r.n, r.seed), {})[r.solver] = r
    gaps_ok = True
    for (_, _), group in by_cell.items():
        if group["rainbow-exact"].success:
            if group["rainbow-exact"].cost - group["kruskal"].cost < -1e-9:
                gaps_ok = False
    expo = summary.get("gap_fit_exponent")
    ok = gaps_ok and expo is not None and 0.35 <= expo <= 0.65
    _report(5, "mst-gap-sqrt-n-exponent", ok,
            f"all gaps >= 0: {gaps_ok}, fitted exponent={expo:.3f} in [0.35, 0.65], "
            f"mean gaps={ {n: round(summary['mean_gap'][n], 3) for n in ns} }")


def test_c06_rainbow_tour_success_and_band(tmp_path):
    ns = [500, 1000, 2000]
    cfg = hs.ExperimentConfig(kind="tour-greedy", ns=ns, seeds=50,
                              out=str(tmp_path / "tour.csv"), base_seed=400,
                              params={"eps": 0.2})
    records, summary = hs.run_experiment(cfg)
    succ = summary["success_rate"]
    rate_ok = all(succ[n] >= 0.90 for n in ns)
    norm = {n: summary["mean_cost"][n] / (math.sqrt(n) * math.log(n))
            for n in ns if summary["mean_cost"][n] is not None}
    band = max(norm.values()) / min(norm.values()) if norm else math.inf
    # the per-output permutation + n-distinct-colors verifier runs inside
    # rainbow_tour; every successful row passed it by construction
    ok = rate_ok and band < 2.5
    _report(6, "rainbow-tour-success-and-sqrtnlogn-band", ok,
            f"success={ {n: round(succ[n], 3) for n in ns} }, "
            f"cost/(sqrt(n)ln n)={ {n: round(v, 3) for n, v in norm.items()} }, "
            f"band={band:.3f} (<2.5)")


def test_c07_tsp_gap_direction(tmp_path):
    ns = [500, 1000, 2000]
    cfg = hs.ExperimentConfig(kind="tsp-gap", ns=ns, seeds=20,
                              out=str(tmp_path / "tspgap.csv"), base_seed=500,
                              params={"eps": 0.2, "two_opt_sweeps": 60})
    records, summary = hs.run_experiment(cfg)
    gaps = summary["mean_gap"]
    positive = all(gaps[n] is not None and gaps[n] > 0 for n in ns)
    norm = {n: gaps[n] / math.sqrt(n) for n in ns if gaps[n] is not None}
    holds = norm[2000] >= 0.5 * norm[500]
    ok = positive and holds
    _report(7, "tsp-gap-heuristic-direction", ok,
            f"mean gaps={ {n: round(gaps[n], 2) for n in ns} } "
            f"(heuristic-vs-heuristic, directional), gap/sqrt(n)="
            f"{ {n: round(v, 3) for n, v in norm.items()} }, "
            f"ratio(2000 vs 500)={norm[2000] / norm[500]:.3f} (>=0.5)")


def test_c08_repeat_color_fraction():
    alpha = beta = 10**4
    closed = cs.expected_repeat_count(alpha, beta) / beta
    fracs = [cs.empirical_repeat_count(alpha, beta, inst.SeedSpec(800 + s)).fraction
             for s in range(100)]
    mean = float(np.mean(fracs))
    ok = abs(mean - closed) <= 0.01 and abs(closed - (1 - 2 / math.e)) < 1e-3
    _report(8, "repeat-color-closed-form", ok,
            f"empirical={mean:.5f} vs closed-form={closed:.5f} "
            f"(limit 1-2/e={1 - 2 / math.e:.5f}), tol 0.01")


@pytest.mark.xfail(strict=False, reason=(
    "two-point copies with isolation D=4 at unit density have expected count "
    "~ n * 3.1 * exp(-58) (union of two radius-4 discs must be empty); zero "
    "copies at any desk-scale n, so kappa > 0 cannot hold"))
def test_c09_pair_copy_linearity():
    ns = [1000, 4000, 16000]
    ratios = {}
    for n in ns:
        ins = inst.gen_euclidean(n, scale=math.sqrt(n), seed=inst.SeedSpec(900 + n))
        copies = cs.find_pair_copies(ins, 0.25, 4.0)
        ratios[n] = copies.count / n
    positive = all(ratios[n] > 0 for n in ns)
    band = (max(ratios.values()) / min(ratios.values())) if positive else math.inf
    ok = positive and band <= 1.5
    _report(9, "pair-copy-linearity", ok,
            f"kappa/n={ {n: round(v, 5) for n, v in ratios.items()} }, "
            f"need kappa>0 and 1.5x band")


def test_c10_wastlund_constant():
    res = bl.wastlund_constant(64)
    fine = bl.wastlund_constant(128)
    stable = abs(res.tau - fine.tau) <= 1e-4
    # golden value frozen from the high-precision derivation oracle
    golden = 2.0415481864
    ok = stable and abs(fine.tau - golden) < 1e-6
    _report(10, "wastlund-constant", ok,
            f"tau={fine.tau:.10f}, halving delta={abs(res.tau - fine.tau):.2e}, "
            f"golden={golden}")


def test_c11_determinism_across_thread_counts(tmp_path):
    # representative acceptance configs re-run at different worker counts
    configs = [
        dict(kind="mst-gap", ns=[50, 100], seeds=4, base_seed=300),
        dict(kind="tour-greedy", ns=[300], seeds=4, base_seed=400,
             params={"eps": 0.2}),
        dict(kind="rainbow-mst-trend", ns=[50, 100], seeds=4, base_seed=100),
    ]
    old = os.environ.get("RAINBOW_OPT_THREADS")
    identical = True
    try:
        for k, cfg in enumerate(configs):
            pa = tmp_path / f"t1_{k}.csv"
            pb = tmp_path / f"t3_{k}.csv"
            os.environ["RAINBOW_OPT_THREADS"] = "1"
            hs.run_experiment(hs.ExperimentConfig(out=str(pa), **cfg))
            os.environ["RAINBOW_OPT_THREADS"] = "3"
            hs.run_experiment(hs.ExperimentConfig(out=str(pb), **cfg))
            identical &= pa.read_bytes() == pb.read_bytes()
    finally:
        if old is None:
            os.environ.pop("RAINBOW_OPT_THREADS", None)
        else:
            os.environ["RAINBOW_OPT_THREADS"] = old
    _report(11, "csv-byte-determinism", identical,
            f"{len(configs)} configs x workers in {{1,3}} byte-identical")
