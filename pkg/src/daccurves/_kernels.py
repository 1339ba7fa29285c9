"""Hot numeric kernels, jitted when numba is available.

The numpy fallbacks implement the same contracts; numba only removes
per-node interpreter overhead for large fits and batch prediction.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _best_split_jit(Xt: np.ndarray, y: np.ndarray, min_leaf: int):
    """Xt is (n_feats, n_rows), rows of one node, feature rows in the
    caller's tie-break order. Returns (local feature index, threshold) or
    (-1, 0.0). Score: total within-child sum of squared deviations."""
    f_count, m = Xt.shape
    best_score = np.inf
    best_f = -1
    best_t = 0.0
    for f in range(f_count):
        order = np.argsort(Xt[f])
        s1 = 0.0
        s2 = 0.0
        tot1 = 0.0
        tot2 = 0.0
        for i in range(m):
            v = y[order[i]]
            tot1 += v
            tot2 += v * v
        for i in range(1, m):
            v = y[order[i - 1]]
            s1 += v
            s2 += v * v
            if i < min_leaf or m - i < min_leaf:
                continue
            a = Xt[f, order[i - 1]]
            b = Xt[f, order[i]]
            if a >= b:
                continue
            mid = 0.5 * (a + b)
            if not (a < mid <= b):
                continue
            nl = float(i)
            nr = float(m - i)
            score = (s2 - s1 * s1 / nl) + ((tot2 - s2) - (tot1 - s1) ** 2 / nr)
            if score < best_score:
                best_score = score
                best_f = f
                best_t = mid
    return best_f, best_t


def _best_split_np(Xt: np.ndarray, y: np.ndarray, min_leaf: int):
    m = Xt.shape[1]
    best_score = np.inf
    best_f = -1
    best_t = 0.0
    for f in range(Xt.shape[0]):
        order = np.argsort(Xt[f], kind="stable")
        xs = Xt[f][order]
        ys = y[order]
        c1 = np.cumsum(ys)
        c2 = np.cumsum(ys * ys)
        pos = np.arange(min_leaf, m - min_leaf + 1)
        if pos.size == 0:
            continue
        mid = 0.5 * (xs[pos - 1] + xs[pos])
        ok = (xs[pos - 1] < mid) & (mid <= xs[pos])
        if not ok.any():
            continue
        pos = pos[ok]
        mid = mid[ok]
        nl = pos.astype(np.float64)
        nr = m - nl
        s1l = c1[pos - 1]
        s2l = c2[pos - 1]
        score = (s2l - s1l * s1l / nl) + ((c2[-1] - s2l) - (c1[-1] - s1l) ** 2 / nr)
        j = int(np.argmin(score))
        if score[j] < best_score:
            best_score = float(score[j])
            best_f = f
            best_t = float(mid[j])
    return best_f, best_t


@njit(cache=True)
def _apply_jit(
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    X: np.ndarray,
) -> np.ndarray:
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


def _apply_np(feature, threshold, left, right, X):
    out = np.zeros(X.shape[0], dtype=np.int64)
    stack = [(0, np.arange(X.shape[0]))]
    while stack:
        node, rows = stack.pop()
        if feature[node] < 0:
            out[rows] = node
            continue
        go_left = X[rows, feature[node]] < threshold[node]
        stack.append((int(left[node]), rows[go_left]))
        stack.append((int(right[node]), rows[~go_left]))
    return out


@njit(cache=True)
def dac_curve_1d_jit(
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    j: int,
    xs: np.ndarray,
    cy: np.ndarray,
    cx: np.ndarray,
    cx2: np.ndarray,
    center: float,
    axis: np.ndarray,
    k: float,
):
    """One tree's attribution accumulators on a 1-D grid.

    xs is the feature column sorted ascending with cy/cx/cx2 the prefix
    sums of target, centered feature, and squared centered feature; every
    leaf's rule set on feature j is the interval [lo, hi)."""
    n_nodes = feature.size
    acc = np.zeros(axis.size)
    counts = np.zeros(axis.size)
    node_stack = np.empty(n_nodes + 1, dtype=np.int64)
    lo_stack = np.empty(n_nodes + 1, dtype=np.float64)
    hi_stack = np.empty(n_nodes + 1, dtype=np.float64)
    sp = 0
    node_stack[0] = 0
    lo_stack[0] = -np.inf
    hi_stack[0] = np.inf
    sp = 1
    while sp > 0:
        sp -= 1
        node = node_stack[sp]
        lo = lo_stack[sp]
        hi = hi_stack[sp]
        if feature[node] >= 0:
            t = threshold[node]
            if feature[node] == j:
                node_stack[sp] = left[node]
                lo_stack[sp] = lo
                hi_stack[sp] = min(hi, t)
                node_stack[sp + 1] = right[node]
                lo_stack[sp + 1] = max(lo, t)
                hi_stack[sp + 1] = hi
            else:
                node_stack[sp] = left[node]
                lo_stack[sp] = lo
                hi_stack[sp] = hi
                node_stack[sp + 1] = right[node]
                lo_stack[sp + 1] = lo
                hi_stack[sp + 1] = hi
            sp += 2
            continue
        a = np.searchsorted(xs, lo, side="left")
        b = np.searchsorted(xs, hi, side="left")
        if a >= b:
            continue
        cnt = b - a
        mc = (cx[b] - cx[a]) / cnt
        mu0 = mc + center
        if cnt <= 1:
            sg0 = 0.0
        else:
            var = (cx2[b] - cx2[a]) / cnt - mc * mc
            sg0 = np.sqrt(max(var, 0.0))
        tol = 1e-9 * (abs(mu0) + sg0) + 1e-12
        a2 = max(a, np.searchsorted(xs, mu0 - k * sg0 - tol, side="left"))
        b2 = min(b, np.searchsorted(xs, mu0 + k * sg0 + tol, side="right"))
        if a2 >= b2:
            continue
        cnt = b2 - a2
        mc = (cx[b2] - cx[a2]) / cnt
        mu = mc + center
        if cnt <= 1:
            sg = 0.0
        else:
            var = (cx2[b2] - cx2[a2]) / cnt - mc * mc
            sg = np.sqrt(max(var, 0.0))
        mean_y = (cy[b2] - cy[a2]) / cnt
        tol = 1e-9 * (abs(mu) + sg) + 1e-12
        g0 = np.searchsorted(axis, mu - k * sg - tol, side="left")
        g1 = np.searchsorted(axis, mu + k * sg + tol, side="right")
        for g in range(g0, g1):
            acc[g] += mean_y * cnt
            counts[g] += cnt
    return acc, counts


@njit(cache=True)
def pdp_accumulate_jit(
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    value: np.ndarray,
    X: np.ndarray,
    s_dims: np.ndarray,  # feature index per grid dimension (1 or 2 entries)
    ax0: np.ndarray,
    ax1: np.ndarray,  # length 1 dummy when 1-D
):
    """One tree's partial-dependence sum over grid cells.

    The reachable (row, cell) pairs at every node form a product of a row
    subset and per-axis grid index intervals, so complement splits
    partition an index buffer in place and S splits shrink an interval."""
    n = X.shape[0]
    two_d = s_dims.size == 2
    n0 = ax0.size
    n1 = ax1.size if two_d else 1
    acc = np.zeros((n0, n1))
    idx = np.arange(n)
    tmp = np.empty(n, dtype=np.int64)
    n_nodes = feature.size
    cap = n_nodes + 1
    st_node = np.empty(cap, dtype=np.int64)
    st_rlo = np.empty(cap, dtype=np.int64)
    st_rhi = np.empty(cap, dtype=np.int64)
    st_g0 = np.empty(cap, dtype=np.int64)
    st_g1 = np.empty(cap, dtype=np.int64)
    st_h0 = np.empty(cap, dtype=np.int64)
    st_h1 = np.empty(cap, dtype=np.int64)
    st_node[0] = 0
    st_rlo[0] = 0
    st_rhi[0] = n
    st_g0[0] = 0
    st_g1[0] = n0
    st_h0[0] = 0
    st_h1[0] = n1
    sp = 1
    while sp > 0:
        sp -= 1
        node = st_node[sp]
        rlo, rhi = st_rlo[sp], st_rhi[sp]
        g0, g1 = st_g0[sp], st_g1[sp]
        h0, h1 = st_h0[sp], st_h1[sp]
        if feature[node] < 0:
            v = value[node] * (rhi - rlo)
            for a in range(g0, g1):
                for b in range(h0, h1):
                    acc[a, b] += v
            continue
        f = feature[node]
        t = threshold[node]
        if f == s_dims[0]:
            m = g0 + np.searchsorted(ax0[g0:g1], t, side="left")
            if m > g0:
                st_node[sp] = left[node]
                st_rlo[sp] = rlo
                st_rhi[sp] = rhi
                st_g0[sp] = g0
                st_g1[sp] = m
                st_h0[sp] = h0
                st_h1[sp] = h1
                sp += 1
            if m < g1:
                st_node[sp] = right[node]
                st_rlo[sp] = rlo
                st_rhi[sp] = rhi
                st_g0[sp] = m
                st_g1[sp] = g1
                st_h0[sp] = h0
                st_h1[sp] = h1
                sp += 1
        elif two_d and f == s_dims[1]:
            m = h0 + np.searchsorted(ax1[h0:h1], t, side="left")
            if m > h0:
                st_node[sp] = left[node]
                st_rlo[sp] = rlo
                st_rhi[sp] = rhi
                st_g0[sp] = g0
                st_g1[sp] = g1
                st_h0[sp] = h0
                st_h1[sp] = m
                sp += 1
            if m < h1:
                st_node[sp] = right[node]
                st_rlo[sp] = rlo
                st_rhi[sp] = rhi
                st_g0[sp] = g0
                st_g1[sp] = g1
                st_h0[sp] = m
                st_h1[sp] = h1
                sp += 1
        else:
            nl = 0
            nr = 0
            for i in range(rlo, rhi):
                if X[idx[i], f] < t:
                    tmp[rlo + nl] = idx[i]
                    nl += 1
            for i in range(rlo, rhi):
                if X[idx[i], f] >= t:
                    tmp[rlo + nl + nr] = idx[i]
                    nr += 1
            for i in range(rlo, rhi):
                idx[i] = tmp[i]
            mrow = rlo + nl
            if nl > 0:
                st_node[sp] = left[node]
                st_rlo[sp] = rlo
                st_rhi[sp] = mrow
                st_g0[sp] = g0
                st_g1[sp] = g1
                st_h0[sp] = h0
                st_h1[sp] = h1
                sp += 1
            if nr > 0:
                st_node[sp] = right[node]
                st_rlo[sp] = mrow
                st_rhi[sp] = rhi
                st_g0[sp] = g0
                st_g1[sp] = g1
                st_h0[sp] = h0
                st_h1[sp] = h1
                sp += 1
    return acc


best_split_kernel = _best_split_jit if HAVE_NUMBA else _best_split_np
apply_kernel = _apply_jit if HAVE_NUMBA else _apply_np
