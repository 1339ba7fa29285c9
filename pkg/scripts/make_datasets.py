#!/usr/bin/env python3
"""Generate the bundled binary-classification CSVs in data/.

Each dataset pairs a strongly non-monotone single-feature effect with a
few weak linear nuisance features, so a forest clearly outperforms plain
logistic regression while a single learned importance curve for the top
feature closes most of the gap.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

OUT_DIR = Path(__file__).resolve().parent.parent / "data"


def _write(name: str, X: np.ndarray, y: np.ndarray, columns: list[str]) -> None:
    path = OUT_DIR / f"{name}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns + ["label"])
        for row, lab in zip(X, y):
            w.writerow([f"{v:.6f}" for v in row] + [int(lab)])
    print(f"wrote {path} ({X.shape[0]} rows, {X.shape[1]} features)")


def make_band(rng: np.random.Generator, n: int = 900):
    """Label is driven by |x0| (inside/outside a band), invisible to a
    linear score."""
    X = rng.standard_normal((n, 6))
    logit = 2.5 * (np.abs(X[:, 0]) - 0.8) + 0.3 * X[:, 1] - 0.2 * X[:, 2]
    p = 1.0 / (1.0 + np.exp(-3.0 * logit))
    y = (rng.random(n) < p).astype(float)
    return X, y


def make_wells(rng: np.random.Generator, n: int = 900):
    """Two disjoint low-probability wells in x0; weak linear nuisance."""
    X = rng.standard_normal((n, 5))
    in_well = ((X[:, 0] > -1.6) & (X[:, 0] < -0.6)) | (
        (X[:, 0] > 0.5) & (X[:, 0] < 1.4)
    )
    logit = np.where(in_well, -2.2, 2.2) + 0.4 * X[:, 1] + 0.2 * X[:, 3]
    p = 1.0 / (1.0 + np.exp(-logit))
    y = (rng.random(n) < p).astype(float)
    return X, y


def make_ripple(rng: np.random.Generator, n: int = 1000):
    """Oscillating effect of x0 (three sign changes over its range)."""
    X = rng.standard_normal((n, 6))
    logit = 2.0 * np.sin(2.4 * X[:, 0]) + 0.35 * X[:, 2] - 0.25 * X[:, 4]
    p = 1.0 / (1.0 + np.exp(-2.0 * logit))
    y = (rng.random(n) < p).astype(float)
    return X, y


def main() -> None:
    OUT_DIR.mkdir(exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence(20240613))
    for name, maker in (
        ("band", make_band),
        ("wells", make_wells),
        ("ripple", make_ripple),
    ):
        X, y = maker(rng)
        _write(name, X, y, [f"f{i}" for i in range(X.shape[1])])


if __name__ == "__main__":
    main()
