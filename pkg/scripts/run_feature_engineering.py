#!/usr/bin/env python3
"""Run the curve-augmented logistic regression experiment on the bundled
datasets (or any CSVs with a binary `label` column) over several seeds."""

from __future__ import annotations

import argparse
from pathlib import Path

from daccurves.curveio import load_dataset_csv, write_text_atomic
from daccurves.featlab import FeParams, run_fe_experiment


def main(argv: list[str] | None = None) -> int:
    repo = Path(__file__).resolve().parent.parent
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "--data",
        nargs="+",
        default=sorted(str(p) for p in (repo / "data").glob("*.csv")),
    )
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--trees", type=int, default=50)
    ap.add_argument("--out", default="fe_results.csv")
    args = ap.parse_args(argv)

    lines = ["dataset,seed,rf_acc,logit_acc,logit_dac_acc,difference"]
    for path in args.data:
        data = load_dataset_csv(path, target="label")
        name = Path(path).stem
        for seed in args.seeds:
            r = run_fe_experiment(
                data, FeParams(seed=seed, n_trees=args.trees), name=name
            )
            lines.append(
                f"{name},{seed},{r.rf_accuracy!r},{r.logit_accuracy!r},"
                f"{r.logit_dac_accuracy!r},{r.difference!r}"
            )
            print(lines[-1])
    write_text_atomic(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
