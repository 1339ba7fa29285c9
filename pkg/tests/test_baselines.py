from __future__ import annotations

import numpy as np
import pytest

from daccurves import (
    DacCurve,
    DacParams,
    Dataset,
    FeatureSet,
    Grid,
    TrainParams,
    conditional_expectation_curve,
    curve_mse,
    default_grid,
    fit_random_forest,
    pdp_curve,
    predict_batch,
)
from conftest import random_dataset


def brute_force_pdp(model, data, S, grid):
    """Average prediction with the S columns overridden cell by cell."""
    shape = tuple(a.size for a in grid.axes)
    out = np.empty(shape)
    for idx in np.ndindex(*shape):
        X = data.X.copy()
        for d, j in enumerate(S.indices):
            X[:, j] = grid.axes[d][idx[d]]
        out[idx] = predict_batch(model, X).mean()
    return out


class TestPdp:
    @pytest.mark.parametrize("s_indices", [(0,), (1,), (0, 2)])
    def test_matches_brute_force(self, rng, s_indices):
        data = random_dataset(rng, 50, 3)
        model = fit_random_forest(
            data, TrainParams(n_trees=5, min_samples_leaf=3, seed=2)
        )
        S = FeatureSet(s_indices)
        grid = default_grid(data, S, DacParams(grid_points_per_dim=7))
        c = pdp_curve(model, data, S, grid)
        expected = brute_force_pdp(model, data, S, grid)
        assert np.allclose(c.values, expected, atol=1e-12, rtol=0)
        assert np.all(c.defined)

    def test_ties_and_threshold_boundaries(self, rng):
        data = random_dataset(rng, 40, 2, ties=True)
        model = fit_random_forest(
            data, TrainParams(n_trees=4, min_samples_leaf=2, seed=5)
        )
        S = FeatureSet((0,))
        # grid points landing exactly on integer thresholds
        grid = Grid((np.array([0.0, 1.0, 2.0, 3.0]),))
        c = pdp_curve(model, data, S, grid)
        expected = brute_force_pdp(model, data, S, grid)
        assert np.allclose(c.values, expected, atol=1e-12, rtol=0)


class TestConditionalExpectation:
    def test_bin_means(self):
        """Rows fall in midpoint-delimited bins; each cell averages the
        predictions of its bin's rows."""
        X = np.array([[0.1], [0.4], [0.6], [2.0]])
        y = np.zeros(4)
        data = Dataset(X, y, ("a",))
        model = fit_random_forest(
            data, TrainParams(n_trees=1, max_depth=0, seed=0)
        )
        grid = Grid((np.array([0.0, 1.0]),))
        preds = np.array([10.0, 20.0, 30.0, 40.0])
        c = conditional_expectation_curve(model, data, FeatureSet((0,)), grid, preds)
        # bin edge at 0.5: rows {0.1, 0.4} -> cell 0, rows {0.6, 2.0} -> cell 1
        assert c.values[0] == pytest.approx(15.0)
        assert c.values[1] == pytest.approx(35.0)
        assert np.array_equal(c.counts, [2.0, 2.0])

    def test_empty_bin_undefined(self):
        X = np.array([[0.0], [0.1]])
        data = Dataset(X, np.zeros(2), ("a",))
        model = fit_random_forest(data, TrainParams(n_trees=1, max_depth=0))
        grid = Grid((np.array([0.0, 5.0, 10.0]),))
        c = conditional_expectation_curve(model, data, FeatureSet((0,)), grid)
        assert c.defined[0] and not c.defined[1] and not c.defined[2]

    def test_matches_explicit_predictions(self, rng):
        data = random_dataset(rng, 80, 2)
        model = fit_random_forest(data, TrainParams(n_trees=3, seed=1))
        S = FeatureSet((0,))
        grid = default_grid(data, S, DacParams(grid_points_per_dim=9))
        a = conditional_expectation_curve(model, data, S, grid)
        b = conditional_expectation_curve(
            model, data, S, grid, predictions=predict_batch(model, data.X)
        )
        assert np.array_equal(
            a.values[a.defined], b.values[b.defined]
        )


class TestCurveMse:
    def _curve(self, values, counts):
        grid = Grid((np.arange(float(len(values))),))
        return DacCurve(
            grid, np.asarray(values, float), np.asarray(counts, float),
            FeatureSet((0,)),
        )

    def test_joint_mask(self):
        a = self._curve([1.0, 2.0, np.nan], [1, 1, 0])
        b = self._curve([2.0, np.nan, 5.0], [1, 0, 1])
        # only cell 0 is jointly defined
        assert curve_mse(a, b) == pytest.approx(1.0)

    def test_grid_mismatch(self):
        a = self._curve([1.0, 2.0], [1, 1])
        grid = Grid((np.array([0.0, 0.5]),))
        b = DacCurve(grid, np.ones(2), np.ones(2), FeatureSet((0,)))
        with pytest.raises(ValueError):
            curve_mse(a, b)

    def test_no_joint_cells(self):
        a = self._curve([1.0, np.nan], [1, 0])
        b = self._curve([np.nan, 1.0], [0, 1])
        with pytest.raises(ValueError):
            curve_mse(a, b)
