"""Regenerate the committed highly-correlated covariance matrix.

The matrix is Q diag(2, 2, 1, 0, 0) Q^T for a fixed random orthogonal Q,
so its eigenvalues are exactly {2, 2, 1, 0, 0}. The result is committed as
package data so every run sees the identical matrix.
"""

import json
import pathlib

import numpy as np

SEED = 190617
OUT = pathlib.Path(__file__).resolve().parents[1] / "src/daccurves/data/highly_correlated_cov.json"


def main():
    rng = np.random.default_rng(SEED)
    q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    cov = q @ np.diag([2.0, 2.0, 1.0, 0.0, 0.0]) @ q.T
    cov = 0.5 * (cov + cov.T)
    OUT.write_text(json.dumps({"seed": SEED, "matrix": cov.tolist()}, indent=2) + "\n")
    print(f"wrote {OUT}")
    print("eigenvalues:", np.linalg.eigvalsh(cov))


if __name__ == "__main__":
    main()
