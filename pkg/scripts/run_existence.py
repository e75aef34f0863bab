#!/usr/bin/env python3
"""Drive the perturbation schedule down to the unperturbed equation and
print the stage ladder with the final solution's certificates.

Typical run:

    python3 scripts/run_existence.py --lam 1.0 --out out/existence
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from csflow import (
    DEFAULT_SCHEDULE,
    FlowOptions,
    ProblemParams,
    continuation,
    make_grid,
)
from csflow.cli import write_profile_csv


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--omega", type=float, default=1.0)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--p", type=float, default=5.0)
    ap.add_argument("--r-max", type=float, default=40.0)
    ap.add_argument("--n-nodes", type=int, default=4097)
    ap.add_argument("--max-iters", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("out/existence"))
    args = ap.parse_args()

    params = ProblemParams(omega=args.omega, lam=args.lam, p=args.p)
    grid = make_grid(args.r_max, args.n_nodes)
    opts = FlowOptions(max_iters=args.max_iters, rng_seed=args.seed)

    report = continuation(params, DEFAULT_SCHEDULE, grid, opts)

    print(f"{'gamma':>12} {'beta':>12} {'energy':>16} {'grad':>10} {'nodes':>5}")
    for st in report.stages:
        print(
            f"{st.gamma:12.6g} {st.beta:12.6g} {st.energy:16.8f} "
            f"{st.grad_norm:10.2e} {st.node_count:5d}"
        )
    if report.aborted_at is not None:
        print(f"aborted at stage {report.aborted_at}")
        return 1

    final = report.final
    res = final.residuals
    print(f"final energy      {final.energy:.8f}")
    print(f"final grad_norm   {res.grad_norm:.3e}")
    print(f"final nehari      {res.nehari:.3e}")
    print(f"final pohozaev    {res.pohozaev:.3e}")
    print(f"sign changes      {final.cone.node_count}")

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_profile_csv(args.out / "final.csv", grid, final.field)
    print(f"wrote {args.out}/report.json and final.csv")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
