from __future__ import annotations

import numpy as np
import pytest

from daccurves import (
    DacParams,
    Dataset,
    FeatureSet,
    Grid,
    TrainParams,
    default_grid,
    ensemble_dac_curve,
    evaluate_curve,
    fit_random_forest,
    fit_tree,
    leaf_summary,
    tree_dac_curve,
)
from conftest import random_dataset
from naive_dac import naive_tree_dac_curve


def four_point_data() -> Dataset:
    X = np.array([[0.1], [0.2], [0.7], [0.9]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    return Dataset(X, y, ("a",))


class TestFeatureSetAndGrid:
    def test_featureset_validation(self):
        with pytest.raises(ValueError):
            FeatureSet(())
        with pytest.raises(ValueError):
            FeatureSet((1, 1))
        with pytest.raises(ValueError):
            FeatureSet((2, 1))
        with pytest.raises(ValueError):
            FeatureSet((-1,))
        FeatureSet((0, 3)).validate(4)
        with pytest.raises(ValueError):
            FeatureSet((0, 3)).validate(3)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            Grid((np.array([0.0, 0.0]),))
        with pytest.raises(ValueError):
            Grid((np.array([1.0, 0.0]),))
        with pytest.raises(ValueError):
            Grid((np.array([0.0, np.inf]),))

    def test_dac_params_validation(self):
        with pytest.raises(ValueError):
            DacParams(k=-0.5)
        with pytest.raises(ValueError):
            DacParams(grid_points_per_dim=1)

    def test_default_grid_spans_range(self):
        data = Dataset(
            np.linspace(0, 1, 9).reshape(-1, 1), np.zeros(9), ("a",)
        )
        g = default_grid(data, FeatureSet((0,)), DacParams(grid_points_per_dim=5))
        assert np.allclose(g.axes[0], [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_default_grid_constant_column_warns(self):
        data = Dataset(np.ones((5, 1)), np.zeros(5), ("a",))
        with pytest.warns(UserWarning):
            g = default_grid(data, FeatureSet((0,)), DacParams())
        assert g.axes[0].size == 1
        assert g.axes[0][0] == 1.0


class TestLeafSummary:
    def test_two_point_leaf(self):
        """Root split at 0.45 isolates {0.7, 0.9}; with k=1 both points
        survive trimming (they sit exactly one sigma from the mean)."""
        data = four_point_data()
        tree = fit_tree(data, TrainParams(max_depth=1, min_samples_leaf=1))
        assert tree.threshold[0] == pytest.approx(0.45)
        right = int(tree.right[0])
        s = leaf_summary(tree, right, data, FeatureSet((0,)), 1.0)
        assert s.mu[0] == pytest.approx(0.8, abs=1e-12)
        assert s.sigma[0] == pytest.approx(0.1, abs=1e-12)
        assert s.count == 2
        assert s.mean_y == pytest.approx(1.0, abs=1e-12)
        assert s.lo[0] == pytest.approx(0.7, abs=1e-12)
        assert s.hi[0] == pytest.approx(0.9, abs=1e-12)

    def test_left_leaf(self):
        data = four_point_data()
        tree = fit_tree(data, TrainParams(max_depth=1, min_samples_leaf=1))
        left = int(tree.left[0])
        s = leaf_summary(tree, left, data, FeatureSet((0,)), 1.0)
        assert s.mu[0] == pytest.approx(0.15, abs=1e-12)
        assert s.sigma[0] == pytest.approx(0.05, abs=1e-12)
        assert s.mean_y == pytest.approx(0.0, abs=1e-12)

    def test_disentangling_ignores_complement_rules(self, rng):
        """Rules on features outside S must not shrink the subset: a leaf
        reached only through complement splits summarizes every row."""
        data = random_dataset(rng, 60, 3)
        tree = fit_tree(
            data, TrainParams(min_samples_leaf=5, allowed_features=(1, 2))
        )
        S = FeatureSet((0,))
        for leaf in tree.leaf_ids():
            s = leaf_summary(tree, int(leaf), data, S, 1.0)
            col = data.X[:, 0]
            mu0, sg0 = col.mean(), col.std()
            keep = np.abs(col - mu0) <= sg0 + 1e-9 * (abs(mu0) + sg0) + 1e-12
            assert s.count == keep.sum()
            assert s.mean_y == pytest.approx(data.y[keep].mean(), abs=1e-12)

    def test_zero_variance_leaf(self):
        X = np.array([[1.0], [1.0], [3.0]])
        y = np.array([5.0, 5.0, 0.0])
        data = Dataset(X, y, ("a",))
        tree = fit_tree(data, TrainParams(min_samples_leaf=1))
        leaves = tree.apply(X)
        s = leaf_summary(tree, int(leaves[0]), data, FeatureSet((0,)), 1.0)
        assert s.sigma[0] == 0.0
        assert s.lo[0] == s.hi[0] == 1.0
        assert s.count == 2


class TestTreeCurve:
    def test_four_point_curve(self):
        data = four_point_data()
        tree = fit_tree(data, TrainParams(max_depth=1, min_samples_leaf=1))
        grid = Grid((np.linspace(0.0, 1.0, 11),))
        c = tree_dac_curve(tree, data, FeatureSet((0,)), grid, 1.0)
        # low leaf covers [0.1, 0.2], high leaf [0.7, 0.9]; the middle
        # and the extremes fall outside every trimmed interval
        assert c.values[1] == pytest.approx(0.0, abs=1e-12)
        assert c.values[2] == pytest.approx(0.0, abs=1e-12)
        assert np.isnan(c.values[5])
        assert c.values[7] == pytest.approx(1.0, abs=1e-12)
        assert c.values[9] == pytest.approx(1.0, abs=1e-12)
        assert np.isnan(c.values[0]) and np.isnan(c.values[10])
        assert c.counts[7] == 2.0

    @pytest.mark.parametrize("ties", [False, True])
    @pytest.mark.parametrize("s_size", [1, 2])
    def test_matches_naive(self, ties, s_size):
        rng = np.random.default_rng(100 * s_size + ties)
        for trial in range(20):
            n = int(rng.integers(5, 21))
            d = int(rng.integers(max(2, s_size), 4))
            data = random_dataset(rng, n, d, ties=ties)
            tree = fit_tree(
                data,
                TrainParams(
                    max_depth=2,
                    min_samples_leaf=1,
                    seed=int(rng.integers(1 << 30)),
                ),
            )
            S = FeatureSet(
                tuple(sorted(rng.choice(d, size=s_size, replace=False)))
            )
            grid = Grid(
                tuple(
                    np.sort(rng.uniform(-3, 3, size=int(rng.integers(2, 8))))
                    for _ in range(s_size)
                )
            )
            if any(np.any(np.diff(a) <= 0) for a in grid.axes):
                continue
            k = float(rng.uniform(0.0, 2.5))
            c = tree_dac_curve(tree, data, S, grid, k)
            vals, counts = naive_tree_dac_curve(
                tree, data.X, data.y, S.indices, grid.axes, k
            )
            assert np.array_equal(counts, c.counts)
            both = counts > 0
            assert np.array_equal(both, c.defined)
            assert np.allclose(c.values[both], vals[both], atol=1e-12, rtol=0)


class TestEnsembleCurve:
    def test_renormalizes_over_covering_trees(self):
        """Where only one tree's leaves cover a cell, the ensemble value is
        that tree's value, regardless of its weight."""
        data = four_point_data()
        tree = fit_tree(data, TrainParams(max_depth=1, min_samples_leaf=1))
        stump = fit_tree(data, TrainParams(max_depth=0))
        from daccurves import Ensemble, Task

        model = Ensemble(
            [tree, stump], np.array([0.25, 0.75]), Task.REGRESSION,
            data.feature_names, 1,
        )
        grid = Grid((np.array([0.05, 0.15, 0.45, 0.7]),))
        c = ensemble_dac_curve(model, data, FeatureSet((0,)), grid, DacParams())
        # trimming leaves the stump's summary covering [0.2, 0.7] with
        # mean_y 0.5; the split tree's leaves cover [0.1,0.2] and [0.7,0.9]
        assert np.isnan(c.values[0])  # no tree covers 0.05
        # at 0.7 both trees cover: (0.25*1.0 + 0.75*0.5) / 1.0
        assert c.values[3] == pytest.approx(0.625, abs=1e-12)
        # at 0.45 only the stump covers, so its value stands alone
        assert c.values[2] == pytest.approx(0.5, abs=1e-12)

    def test_counts_are_summed(self, rng):
        data = random_dataset(rng, 40, 2)
        model = fit_random_forest(data, TrainParams(n_trees=3, seed=1))
        S = FeatureSet((0,))
        grid = default_grid(data, S, DacParams(grid_points_per_dim=12))
        c = ensemble_dac_curve(model, data, S, grid)
        total = np.zeros(grid.shape)
        for tree in model.trees:
            total += tree_dac_curve(tree, data, S, grid, 1.0).counts
        assert np.array_equal(c.counts, total)

    def test_schema_mismatch(self, rng):
        data = random_dataset(rng, 30, 2)
        other = random_dataset(rng, 30, 3)
        model = fit_random_forest(data, TrainParams(n_trees=2, seed=0))
        S = FeatureSet((0,))
        grid = default_grid(other, S, DacParams(grid_points_per_dim=5))
        with pytest.raises(ValueError):
            ensemble_dac_curve(model, other, S, grid)

    def test_missing_feature_gives_constant_curve(self, rng):
        """A feature the forest never splits on yields a curve that is
        exactly constant wherever defined."""
        data = random_dataset(rng, 120, 4)
        model = fit_random_forest(
            data,
            TrainParams(n_trees=10, seed=3, allowed_features=(0, 1, 2)),
        )
        S = FeatureSet((3,))
        grid = default_grid(data, S, DacParams(grid_points_per_dim=40))
        c = ensemble_dac_curve(model, data, S, grid)
        vals = c.values[c.defined]
        assert vals.size > 0
        assert np.all(vals == vals[0])


class TestEvaluateCurve:
    def _curve(self):
        grid = Grid((np.array([0.0, 1.0, 2.0]),))
        values = np.array([1.0, 3.0, np.nan])
        counts = np.array([2.0, 2.0, 0.0])
        from daccurves import DacCurve

        return DacCurve(grid, values, counts, FeatureSet((0,)))

    def test_exact_and_interpolated(self):
        c = self._curve()
        assert evaluate_curve(c, np.array([0.0])) == 1.0
        assert evaluate_curve(c, np.array([0.5])) == pytest.approx(2.0)

    def test_clamps_outside_grid(self):
        c = self._curve()
        assert evaluate_curve(c, np.array([-5.0])) == 1.0

    def test_falls_back_to_nearest_defined(self):
        c = self._curve()
        assert evaluate_curve(c, np.array([2.0])) == 3.0

    def test_bilinear(self, rng):
        data = random_dataset(rng, 60, 2)
        model = fit_random_forest(data, TrainParams(n_trees=5, seed=2))
        S = FeatureSet((0, 1))
        grid = default_grid(data, S, DacParams(grid_points_per_dim=8))
        c = ensemble_dac_curve(model, data, S, grid)
        # grid points evaluate to themselves where fully defined
        ii, jj = np.nonzero(c.defined)
        for i, j in list(zip(ii, jj))[:5]:
            x = np.array([grid.axes[0][i], grid.axes[1][j]])
            assert evaluate_curve(c, x) == pytest.approx(
                c.values[i, j], abs=1e-12
            )
