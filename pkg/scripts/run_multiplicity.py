#!/usr/bin/env python3
"""Count distinct sign-changing solutions at weak coupling by seeding
alternating-bump configurations with increasing numbers of nodes.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from csflow import FlowOptions, ProblemParams, make_grid, multiplicity_sweep


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=0.1)
    ap.add_argument("--k", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--r-max", type=float, default=40.0)
    ap.add_argument("--n-nodes", type=int, default=4097)
    ap.add_argument("--max-iters", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("out/multiplicity"))
    args = ap.parse_args()

    base = ProblemParams()
    grid = make_grid(args.r_max, args.n_nodes)
    opts = FlowOptions(max_iters=args.max_iters, rng_seed=args.seed)

    report = multiplicity_sweep(args.k, args.lam, base, grid, opts)

    print(f"lambda = {report.lam}")
    print(f"{'seed k':>7} {'nodes':>6} {'energy':>16} {'grad':>10}")
    for entry in report.entries:
        print(
            f"{entry.k:7d} {entry.node_count:6d} "
            f"{entry.energy:16.6f} {entry.grad_norm:10.2e}"
        )
    for msg in report.failures:
        print(f"failed: {msg}")
    print(f"distinct sign-changing solutions: {report.distinct_count}")

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "multiplicity.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.out}/multiplicity.json")
    return 0 if report.distinct_count >= 2 else 1


if __name__ == "__main__":
    raise SystemExit(main())
