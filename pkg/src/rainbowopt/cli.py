"""Command line interface.

Subcommands: gen, constants, mst, rainbow-mst, tree-construct, tour-greedy,
experiment, rerun. Exit codes: 0 ok, 1 config/usage error, 2 infeasible or
failed primary result.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import baselines, instance
from .harness import KINDS, ExperimentConfig, rerun_row, run_experiment


def _add_gen(sub):
    p = sub.add_parser("gen", help="generate an instance + coloring file")
    p.add_argument("--kind", choices=("euclid", "uniform"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--out", required=True)


def _add_simple(sub, name, help_, diag=True):
    p = sub.add_parser(name, help=help_)
    p.add_argument("--input", required=True)
    if diag:
        p.add_argument("--diag", default=None, help="write diagnostics JSON here")
    return p


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="rainbowopt")
    sub = ap.add_subparsers(dest="cmd", required=True)
    _add_gen(sub)

    sub.add_parser("constants", help="print reference constants")

    _add_simple(sub, "mst", "plain minimum spanning tree cost", diag=False)

    p = _add_simple(sub, "rainbow-mst", "exact minimum rainbow spanning tree", diag=False)
    p.add_argument("--oracle", action="store_true",
                   help="cross-check with brute force (small n only)")

    p = _add_simple(sub, "tree-construct", "matching-based rainbow tree")
    p.add_argument("--K", type=int, default=20)
    p.add_argument("--B", type=float, default=2.0)

    p = _add_simple(sub, "tour-greedy", "greedy + completion rainbow tour")
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--C", type=float, default=0.9)
    p.add_argument("--budget", type=int, default=50)

    p = sub.add_parser("experiment", help="run a replicated experiment to CSV")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--n-grid", type=int, nargs="+", required=True)
    p.add_argument("--seeds", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--timing", action="store_true",
                   help="record wall times (breaks byte determinism)")
    p.add_argument("--param", action="append", default=[],
                   metavar="KEY=VALUE", help="solver parameter override")

    p = sub.add_parser("rerun", help="recompute one CSV row from its seed")
    p.add_argument("--csv", required=True)
    p.add_argument("--row", type=int, required=True)

    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0

    try:
        return _dispatch(args)
    except (ValueError, OSError, KeyError, IndexError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def _load(path):
    return instance.load(path)


def _dispatch(args) -> int:
    if args.cmd == "gen":
        seed = instance.SeedSpec(args.seed)
        if args.kind == "euclid":
            ins = instance.gen_euclidean(args.n, scale=args.scale, seed=seed)
        else:
            ins = instance.gen_uniform_costs(args.n, seed=seed)
        col = instance.color_edges(instance.edge_count(args.n), args.q, seed)
        instance.save(ins, col, args.out)
        print(f"wrote {args.out}")
        return 0

    if args.cmd == "constants":
        w = baselines.wastlund_constant()
        print(f"zeta3 {baselines.zeta3():.12f}")
        print(f"tau {w.tau:.10f} (est_error {w.est_error:.2e})")
        return 0

    if args.cmd == "mst":
        ins, _ = _load(args.input)
        tree = baselines.kruskal_mst(ins)
        print(f"{tree.total_cost:.17g}")
        return 0

    if args.cmd == "rainbow-mst":
        from .rainbow_exact import (RainbowTree, brute_rainbow_degree_bounded_mst,
                                    min_rainbow_spanning_tree)

        ins, col = _load(args.input)
        res = min_rainbow_spanning_tree(ins, col)
        if not isinstance(res, RainbowTree):
            print(f"infeasible max_common_rank={res.max_common_rank}")
            return 2
        if args.oracle:
            oracle = brute_rainbow_degree_bounded_mst(ins, col, ins.n - 1)
            if not isinstance(oracle, RainbowTree) or \
                    abs(oracle.total_cost - res.total_cost) > 1e-9:
                print("oracle mismatch", file=sys.stderr)
                return 2
        print(f"{res.total_cost:.17g}")
        return 0

    if args.cmd == "tree-construct":
        from .tree_construct import construct_tree

        ins, col = _load(args.input)
        res = construct_tree(ins, col, K=args.K, B=args.B)
        if args.diag:
            with open(args.diag, "w") as f:
                json.dump(res.diagnostics, f, indent=2, sort_keys=True)
        if not res.ok:
            print(f"matching failed deficiency={res.failure.deficiency}")
            return 2
        print(f"{res.tree.total_cost:.17g}")
        return 0

    if args.cmd == "tour-greedy":
        from .tour_greedy import rainbow_tour

        ins, col = _load(args.input)
        res = rainbow_tour(ins, col, eps=args.eps, c_param=args.C, budget=args.budget)
        if args.diag:
            with open(args.diag, "w") as f:
                json.dump(res.diagnostics, f, indent=2, sort_keys=True)
        if not res.ok:
            print(f"failed {type(res.failure).__name__}")
            return 2
        print(f"{res.tour.total_cost:.17g}")
        return 0

    if args.cmd == "experiment":
        params = {}
        for kv in args.param:
            if "=" not in kv:
                raise ValueError(f"--param needs KEY=VALUE, got {kv!r}")
            k, v = kv.split("=", 1)
            try:
                params[k] = json.loads(v)
            except json.JSONDecodeError:
                params[k] = v
        cfg = ExperimentConfig(kind=args.kind, ns=list(args.n_grid),
                               seeds=args.seeds, out=args.out,
                               base_seed=args.base_seed, params=params,
                               record_timing=args.timing)
        _, summary = run_experiment(cfg)
        print(json.dumps(summary, sort_keys=True))
        return 0

    if args.cmd == "rerun":
        row, rec = rerun_row(args.csv, args.row)
        old = row["cost"]
        new = "nan" if math.isnan(rec.cost) else f"{rec.cost:.17g}"
        print(f"stored={old} recomputed={new}")
        return 0 if old == new else 2

    raise ValueError(f"unknown command {args.cmd}")


if __name__ == "__main__":
    sys.exit(main())
