"""
Compiled kernels for CART regression trees.

Trees are stored as flat arrays (sklearn style): ``feature[node] == -1``
marks a leaf; internal nodes send ``x[feature] <= threshold`` to ``left``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LEAF = -1


@njit(cache=True, nogil=True)
def build_tree(X, ranks, y, sample, min_leaf, max_depth, mtry, seed):
    """
    Grow one tree greedily on the rows listed in ``sample`` (may repeat).

    Each node draws ``mtry`` candidate columns without replacement and takes
    the split maximizing ``S_L^2/n_L + S_R^2/n_R`` (equivalently minimizing
    the summed child squared error). Candidate thresholds are midpoints of
    consecutive distinct sorted values. Ties keep the lowest column, then the
    smallest threshold. ``max_depth < 0`` means unbounded. ``ranks[:, f]``
    must order the rows of ``X`` by column ``f``; nodes sort integer keys
    built from it, which is cheaper than an argsort over floats.
    """
    np.random.seed(seed)
    n = sample.shape[0]
    n_rows = max(X.shape[0], n)
    d = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, LEAF, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)

    idx = sample.copy()
    scratch = np.empty(n, np.int64)
    st_node = np.empty(cap, np.int64)
    st_lo = np.empty(cap, np.int64)
    st_hi = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    cols = np.arange(d)
    sp = 0
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = n
    st_depth[0] = 0
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        lo = st_lo[sp]
        hi = st_hi[sp]
        depth = st_depth[sp]
        m = hi - lo

        total = 0.0
        ymin = np.inf
        ymax = -np.inf
        for i in range(lo, hi):
            v = y[idx[i]]
            total += v
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        value[node] = total / m

        if m < 2 * min_leaf or ymin == ymax:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue

        for i in range(mtry):
            j = np.random.randint(i, d)
            tmp = cols[i]
            cols[i] = cols[j]
            cols[j] = tmp
        chosen = np.sort(cols[:mtry].copy())

        best_score = -np.inf
        best_f = -1
        best_thr = 0.0
        seg = idx[lo:hi]
        keys = np.empty(m, np.int64)
        xs = np.empty(m)
        ys = np.empty(m)
        for f in chosen:
            for i in range(m):
                keys[i] = ranks[seg[i], f] * n_rows + i
            keys.sort()
            for i in range(m):
                r = seg[keys[i] % n_rows]
                xs[i] = X[r, f]
                ys[i] = y[r]
            s = 0.0
            for i in range(m - min_leaf):
                s += ys[i]
                nl = i + 1
                if nl < min_leaf:
                    continue
                a = xs[i]
                b = xs[i + 1]
                if not a < b:
                    continue
                nr = m - nl
                sr = total - s
                score = s * s / nl + sr * sr / nr
                if score > best_score:
                    best_score = score
                    best_f = f
                    best_thr = 0.5 * (a + b)
                    # midpoint can round up onto b for adjacent floats
                    if best_thr >= b:
                        best_thr = a

        if best_f < 0:
            continue

        nl = 0
        nr = 0
        for i in range(lo, hi):
            r = idx[i]
            if X[r, best_f] <= best_thr:
                idx[lo + nl] = r
                nl += 1
            else:
                scratch[nr] = r
                nr += 1
        for i in range(nr):
            idx[lo + nl + i] = scratch[i]
        if nl == 0 or nr == 0:
            continue

        feature[node] = best_f
        threshold[node] = best_thr
        lchild = n_nodes
        rchild = n_nodes + 1
        n_nodes += 2
        left[node] = lchild
        right[node] = rchild

        st_node[sp] = rchild
        st_lo[sp] = lo + nl
        st_hi[sp] = hi
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = lchild
        st_lo[sp] = lo
        st_hi[sp] = lo + nl
        st_depth[sp] = depth + 1
        sp += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@njit(cache=True, nogil=True)
def apply_forest(feature, threshold, left, right, roots, X):
    """Leaf node id (global) reached by each row of ``X`` in each tree."""
    n = X.shape[0]
    k_trees = roots.shape[0]
    out = np.empty((n, k_trees), np.int64)
    for i in range(n):
        for k in range(k_trees):
            node = roots[k]
            while feature[node] != LEAF:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i, k] = node
    return out


@njit(cache=True, nogil=True)
def leaf_weights(row_leaves, x_leaves):
    """
    Forest weights over training rows for one query.

    ``row_leaves[t, k]`` is the leaf of training row ``t`` in tree ``k`` and
    ``x_leaves[k]`` the leaf of the query. Each tree spreads mass 1 evenly
    over the rows sharing the query's leaf; the forest averages the trees.
    """
    n, k_trees = row_leaves.shape
    w = np.zeros(n)
    for k in range(k_trees):
        target = x_leaves[k]
        count = 0
        for t in range(n):
            if row_leaves[t, k] == target:
                count += 1
        if count == 0:
            continue
        inv = 1.0 / count
        for t in range(n):
            if row_leaves[t, k] == target:
                w[t] += inv
    return w / k_trees


@njit(cache=True, nogil=True)
def forest_mean_predict(values, leaves):
    n, k_trees = leaves.shape
    out = np.empty(n)
    for i in range(n):
        s = 0.0
        for k in range(k_trees):
            s += values[leaves[i, k]]
        out[i] = s / k_trees
    return out
