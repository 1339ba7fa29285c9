#!/usr/bin/env python3
"""Run the DAC-vs-PDP simulation study and write one result CSV.

Desk-scale defaults; pass --full for the original scale (hours of
compute and tens of GB of memory — only use on a large machine).
"""

from __future__ import annotations

import argparse
import sys
import time

from daccurves.curveio import write_text_atomic
from daccurves.sim import (
    ModelKind,
    Regime,
    SimConfig,
    run_sim_experiment,
    sim_results_csv,
)


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="sim_results.csv")
    ap.add_argument("--n-train", type=int, default=5000)
    ap.add_argument("--n-test", type=int, default=200_000)
    ap.add_argument("--trees", type=int, default=20)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument(
        "--functions", type=int, nargs="+", default=list(range(1, 11))
    )
    ap.add_argument("--full", action="store_true", help="paper-scale sizes")
    args = ap.parse_args(argv)
    if args.full:
        args.n_train, args.n_test, args.trees = 70_000, 15_000_000, 50

    results = []
    t0 = time.perf_counter()
    for kind in ModelKind:
        for regime in Regime:
            for fid in args.functions:
                for seed in args.seeds:
                    cfg = SimConfig(
                        function_id=fid,
                        regime=regime,
                        n_train=args.n_train,
                        n_test=args.n_test,
                        model_kind=kind,
                        n_trees=args.trees,
                        seed=seed,
                    )
                    results.append(run_sim_experiment(cfg))
                print(
                    f"{kind.value} {regime.value} F{fid}: done "
                    f"({time.perf_counter() - t0:.0f}s elapsed)",
                    file=sys.stderr,
                )
    write_text_atomic(args.out, sim_results_csv(results))
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
