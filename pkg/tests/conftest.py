from __future__ import annotations

import numpy as np
import pytest

from daccurves import Dataset


def xor_dataset(repeats: int = 100) -> Dataset:
    """The four XOR corners, each repeated, labels 0/1."""
    X = np.tile(
        np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]),
        (repeats, 1),
    )
    y = np.tile(np.array([0.0, 1.0, 1.0, 0.0]), repeats)
    return Dataset(X, y, ("a", "b"))


def random_dataset(
    rng: np.random.Generator, n: int, d: int, ties: bool = False
) -> Dataset:
    if ties:
        X = rng.integers(0, 4, size=(n, d)).astype(float)
    else:
        X = rng.normal(size=(n, d))
    y = rng.normal(size=n)
    return Dataset(X, y, tuple(f"f{i}" for i in range(d)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
