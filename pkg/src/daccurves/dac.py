"""Disentangled attribution curves over fitted tree ensembles.

A curve for a feature set S is assembled leaf by leaf: each leaf
contributes the mean target of the training rows that satisfy only its
S-rules (outlier-trimmed), spread over the grid cells inside the trimmed
subset's mean +/- k*sigma box, then tree curves are weight-averaged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import product

import numpy as np

from ._kernels import HAVE_NUMBA, dac_curve_1d_jit
from .trees import Dataset, DecisionTree, Ensemble

__all__ = [
    "FeatureSet",
    "DacParams",
    "Grid",
    "LeafSummary",
    "DacCurve",
    "default_grid",
    "leaf_summary",
    "tree_dac_curve",
    "ensemble_dac_curve",
    "evaluate_curve",
]


@dataclass(frozen=True)
class FeatureSet:
    """Strictly increasing feature indices defining the set of interest."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ValueError("feature set must be nonempty")
        if any(b <= a for a, b in zip(idx, idx[1:])) or idx[0] < 0:
            raise ValueError("indices must be strictly increasing and nonnegative")
        object.__setattr__(self, "indices", idx)

    def validate(self, d: int):
        if self.indices[-1] >= d:
            raise ValueError(f"feature index {self.indices[-1]} out of range (d={d})")

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class DacParams:
    k: float = 1.0
    grid_points_per_dim: int = 100

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.grid_points_per_dim < 2:
            raise ValueError("grid_points_per_dim must be >= 2")


@dataclass(frozen=True)
class Grid:
    """One strictly increasing coordinate axis per feature in S."""

    axes: tuple[np.ndarray, ...]

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=np.float64) for a in self.axes)
        for a in axes:
            if a.ndim != 1 or a.size == 0 or not np.all(np.isfinite(a)):
                raise ValueError("each axis must be a finite 1-D array")
            if np.any(np.diff(a) <= 0):
                raise ValueError("axes must be strictly increasing")
        object.__setattr__(self, "axes", axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    def same_as(self, other: "Grid") -> bool:
        return len(self.axes) == len(other.axes) and all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(self.axes, other.axes)
        )


@dataclass(frozen=True)
class LeafSummary:
    """Trimmed statistics of a leaf's S-rule-compliant training subset."""

    leaf_id: int
    mu: np.ndarray
    sigma: np.ndarray
    count: int
    mean_y: float
    lo: np.ndarray  # mu - k*sigma
    hi: np.ndarray  # mu + k*sigma


@dataclass
class DacCurve:
    """Attribution values on the grid; cells with counts == 0 are undefined
    and hold nan."""

    grid: Grid
    values: np.ndarray
    counts: np.ndarray
    feature_set: FeatureSet

    @property
    def defined(self) -> np.ndarray:
        return self.counts > 0


def default_grid(data: Dataset, S: FeatureSet, params: DacParams) -> Grid:
    """Equally spaced points spanning each feature's observed range."""
    S.validate(data.d)
    axes = []
    for j in S.indices:
        lo = float(data.X[:, j].min())
        hi = float(data.X[:, j].max())
        if lo == hi:
            warnings.warn(
                f"feature {j} is constant at {lo}; using a single-point axis",
                stacklevel=2,
            )
            axes.append(np.array([lo]))
        else:
            axes.append(np.linspace(lo, hi, params.grid_points_per_dim))
    return Grid(tuple(axes))


def _sorted_mean(v: np.ndarray) -> float:
    # summing in sorted order makes the statistic independent of row order
    return float(np.sort(v).mean())


def _sorted_mean_std(v: np.ndarray) -> tuple[float, float]:
    s = np.sort(v)
    mu = float(s.mean())
    if s.size <= 1:
        return mu, 0.0
    return mu, float(np.sqrt(np.sort((s - mu) ** 2).mean()))


def _empty_summary(leaf_id: int, p: int) -> LeafSummary:
    z = np.zeros(p)
    return LeafSummary(leaf_id, z, z.copy(), 0, 0.0, z.copy(), z.copy())


def _summarize_subset(
    leaf_id: int, cols: np.ndarray, ysub: np.ndarray, k: float
) -> LeafSummary:
    """Trim once with the pre-trim statistics, then summarize."""
    p = cols.shape[1]
    if cols.shape[0] == 0:
        return _empty_summary(leaf_id, p)
    mu0 = np.empty(p)
    sg0 = np.empty(p)
    for j in range(p):
        mu0[j], sg0[j] = _sorted_mean_std(cols[:, j])
    # small band so points exactly k*sigma from the mean (every 2-point
    # subset) survive float rounding of the statistics
    tol = 1e-9 * (np.abs(mu0) + sg0) + 1e-12
    keep = np.all(np.abs(cols - mu0) <= k * sg0 + tol, axis=1)
    if not keep.any():
        return _empty_summary(leaf_id, p)
    tc = cols[keep]
    mu = np.empty(p)
    sg = np.empty(p)
    for j in range(p):
        mu[j], sg[j] = _sorted_mean_std(tc[:, j])
    mean_y = _sorted_mean(ysub[keep])
    return LeafSummary(
        leaf_id, mu, sg, int(tc.shape[0]), mean_y, mu - k * sg, mu + k * sg
    )


def leaf_summary(
    tree: DecisionTree,
    leaf_id: int,
    data: Dataset,
    S: FeatureSet,
    k: float,
    _rules: list[tuple[int, float, bool]] | None = None,
) -> LeafSummary:
    """Summary for one leaf: rows obeying the leaf's S-rules only, trimmed."""
    S.validate(data.d)
    if _rules is None:
        _rules = tree.path_rules()[leaf_id]
    sset = set(S.indices)
    mask = np.ones(data.n, dtype=bool)
    for f, t, is_left in _rules:
        if f not in sset:
            continue
        if is_left:
            mask &= data.X[:, f] < t
        else:
            mask &= data.X[:, f] >= t
    cols = data.X[np.ix_(mask.nonzero()[0], np.asarray(S.indices))]
    return _summarize_subset(leaf_id, cols, data.y[mask], k)


class _SortedFeature:
    """Prefix sums over one feature column sorted by (value, target).

    For |S| = 1 every leaf's S-rule set is an interval on that feature, so
    the rule-compliant subset, its trimmed refinement, and all statistics
    are contiguous-slice queries. Sorting by (x, y) keeps every statistic
    independent of dataset row order."""

    def __init__(self, x: np.ndarray, y: np.ndarray):
        order = np.lexsort((y, x))
        self.xs = x[order]
        ys = y[order]
        self.center = float(self.xs[self.xs.size // 2])
        xc = self.xs - self.center
        self.cy = np.concatenate([[0.0], np.cumsum(ys)])
        self.cx = np.concatenate([[0.0], np.cumsum(xc)])
        self.cx2 = np.concatenate([[0.0], np.cumsum(xc * xc)])

    def stats(self, a: int, b: int) -> tuple[float, float, float, int]:
        """(mu, sigma, mean_y, count) over the sorted slice [a, b)."""
        cnt = b - a
        mc = (self.cx[b] - self.cx[a]) / cnt
        mu = mc + self.center
        if cnt <= 1:
            sigma = 0.0
        else:
            var = (self.cx2[b] - self.cx2[a]) / cnt - mc * mc
            sigma = float(np.sqrt(max(var, 0.0)))
        mean_y = (self.cy[b] - self.cy[a]) / cnt
        return float(mu), sigma, float(mean_y), cnt

    def summarize_interval(self, lo: float, hi: float, k: float, leaf_id: int) -> LeafSummary:
        """Summary of {lo <= x < hi}, trimmed once with pre-trim stats."""
        a = int(np.searchsorted(self.xs, lo, side="left"))
        b = int(np.searchsorted(self.xs, hi, side="left"))
        if a >= b:
            return _empty_summary(leaf_id, 1)
        mu0, sg0, _, _ = self.stats(a, b)
        tol = 1e-9 * (abs(mu0) + sg0) + 1e-12
        a2 = max(a, int(np.searchsorted(self.xs, mu0 - k * sg0 - tol, side="left")))
        b2 = min(b, int(np.searchsorted(self.xs, mu0 + k * sg0 + tol, side="right")))
        if a2 >= b2:
            return _empty_summary(leaf_id, 1)
        mu, sg, mean_y, cnt = self.stats(a2, b2)
        one = np.ones(1)
        return LeafSummary(
            leaf_id,
            mu * one,
            sg * one,
            cnt,
            mean_y,
            (mu - k * sg) * one,
            (mu + k * sg) * one,
        )


def _tree_dac_curve_1d(
    tree: DecisionTree, sf: _SortedFeature, j: int, S: FeatureSet, grid: Grid, k: float
) -> DacCurve:
    if HAVE_NUMBA:
        acc, counts = dac_curve_1d_jit(
            tree.feature,
            tree.threshold,
            tree.left,
            tree.right,
            j,
            sf.xs,
            sf.cy,
            sf.cx,
            sf.cx2,
            sf.center,
            grid.axes[0],
            k,
        )
        values = np.full(grid.shape, np.nan)
        mask = counts > 0
        values[mask] = acc[mask] / counts[mask]
        return DacCurve(grid, values, counts, S)
    acc = np.zeros(grid.shape)
    counts = np.zeros(grid.shape)
    rules = tree.path_rules()
    cache: dict[tuple[float, float], LeafSummary] = {}
    for leaf in tree.leaf_ids():
        lo, hi = -np.inf, np.inf
        for f, t, is_left in rules[leaf]:
            if f != j:
                continue
            if is_left:
                hi = min(hi, t)
            else:
                lo = max(lo, t)
        s = cache.get((lo, hi))
        if s is None:
            s = cache[(lo, hi)] = sf.summarize_interval(lo, hi, k, int(leaf))
        if s.count == 0:
            continue
        sl = _interval_slices(grid, s)
        acc[sl] += s.mean_y * s.count
        counts[sl] += s.count
    values = np.full(grid.shape, np.nan)
    mask = counts > 0
    values[mask] = acc[mask] / counts[mask]
    return DacCurve(grid, values, counts, S)


def _interval_slices(grid: Grid, s: LeafSummary) -> tuple[slice, ...]:
    """Closed-interval slice per axis (both ends inclusive); a small band
    keeps cells sitting exactly on an interval edge from being dropped by
    float rounding of the interval statistics."""
    out = []
    tol = 1e-9 * (np.abs(s.mu) + s.sigma) + 1e-12
    for a, l, h, t in zip(grid.axes, s.lo, s.hi, tol):
        i0 = int(np.searchsorted(a, l - t, side="left"))
        i1 = int(np.searchsorted(a, h + t, side="right"))
        out.append(slice(i0, i1))
    return tuple(out)


def tree_dac_curve(
    tree: DecisionTree,
    data: Dataset,
    S: FeatureSet,
    grid: Grid,
    k: float,
    _sf: _SortedFeature | None = None,
) -> DacCurve:
    """Accumulate leaf contributions (mean_y weighted by point count) over
    the grid cells inside each leaf's trimmed interval."""
    S.validate(data.d)
    if len(S) == 1:
        j = S.indices[0]
        if _sf is None:
            _sf = _SortedFeature(data.X[:, j], data.y)
        return _tree_dac_curve_1d(tree, _sf, j, S, grid, k)
    acc = np.zeros(grid.shape)
    counts = np.zeros(grid.shape)
    rules = tree.path_rules()
    sset = set(S.indices)
    scols = np.asarray(S.indices)
    # leaves below the last S-split share their S-rules and hence their
    # summary; cache by the (order-independent) rule set
    cache: dict[tuple, LeafSummary] = {}
    for leaf in tree.leaf_ids():
        key = tuple(sorted(r for r in rules[leaf] if r[0] in sset))
        s = cache.get(key)
        if s is None:
            mask = np.ones(data.n, dtype=bool)
            for f, t, is_left in key:
                if is_left:
                    mask &= data.X[:, f] < t
                else:
                    mask &= data.X[:, f] >= t
            rows = mask.nonzero()[0]
            s = _summarize_subset(
                int(leaf), data.X[np.ix_(rows, scols)], data.y[rows], k
            )
            cache[key] = s
        if s.count == 0:
            continue
        sl = _interval_slices(grid, s)
        acc[sl] += s.mean_y * s.count
        counts[sl] += s.count
    values = np.full(grid.shape, np.nan)
    mask = counts > 0
    values[mask] = acc[mask] / counts[mask]
    return DacCurve(grid, values, counts, S)


def ensemble_dac_curve(
    model: Ensemble,
    data: Dataset,
    S: FeatureSet,
    grid: Grid,
    params: DacParams = DacParams(),
) -> DacCurve:
    """Per-cell weighted average over the trees defined at that cell."""
    S.validate(data.d)
    if data.d != model.n_features:
        raise ValueError("data does not match model schema")
    num = np.zeros(grid.shape)
    den = np.zeros(grid.shape)
    counts = np.zeros(grid.shape)
    sf = _SortedFeature(data.X[:, S.indices[0]], data.y) if len(S) == 1 else None
    for tree, w in zip(model.trees, model.weights):
        c = tree_dac_curve(tree, data, S, grid, params.k, _sf=sf)
        m = c.defined
        num[m] += w * c.values[m]
        den[m] += w
        counts += c.counts
    values = np.full(grid.shape, np.nan)
    mask = den > 0
    values[mask] = num[mask] / den[mask]
    return DacCurve(grid, values, counts, S)


def _nearest_defined(defined: np.ndarray, idx: tuple[int, ...]) -> tuple[int, ...]:
    """Nearest defined cell: scan outward along each single axis first,
    then fall back to the globally nearest defined cell."""
    if defined[idx]:
        return idx
    shape = defined.shape
    best: tuple[int, tuple[int, ...]] | None = None
    for ax in range(len(shape)):
        for step in range(1, shape[ax]):
            for sgn in (-1, 1):
                j = idx[ax] + sgn * step
                if 0 <= j < shape[ax]:
                    cand = idx[:ax] + (j,) + idx[ax + 1:]
                    if defined[cand]:
                        if best is None or step < best[0]:
                            best = (step, cand)
            if best is not None and best[0] <= step:
                break
    if best is not None:
        return best[1]
    cells = np.argwhere(defined)
    dist = np.abs(cells - np.asarray(idx)).sum(axis=1)
    return tuple(int(v) for v in cells[int(np.argmin(dist))])


def evaluate_curve(curve: DacCurve, x_S: np.ndarray) -> float:
    """Multilinear interpolation with boundary clamping; undefined corners
    fall back to the nearest defined cell."""
    x = np.atleast_1d(np.asarray(x_S, dtype=np.float64))
    grid = curve.grid
    if x.shape[0] != len(grid.axes):
        raise ValueError(f"expected {len(grid.axes)} coordinates, got {x.shape[0]}")
    defined = curve.defined
    if not defined.any():
        raise ValueError("curve has no defined cells")
    lo_idx: list[int] = []
    hi_idx: list[int] = []
    frac: list[float] = []
    for a, xv in zip(grid.axes, x):
        xv = min(max(xv, a[0]), a[-1])
        i1 = int(np.searchsorted(a, xv, side="left"))
        if i1 == 0:
            lo_idx.append(0)
            hi_idx.append(0)
            frac.append(0.0)
        else:
            i0 = i1 - 1
            lo_idx.append(i0)
            hi_idx.append(i1)
            frac.append(float((xv - a[i0]) / (a[i1] - a[i0])))
    total = 0.0
    for corner in product(*[(0, 1)] * len(grid.axes)):
        w = 1.0
        idx = []
        for dim, c in enumerate(corner):
            w *= frac[dim] if c else (1.0 - frac[dim])
            idx.append(hi_idx[dim] if c else lo_idx[dim])
        if w == 0.0:
            continue
        cell = _nearest_defined(defined, tuple(idx))
        total += w * float(curve.values[cell])
    return total
