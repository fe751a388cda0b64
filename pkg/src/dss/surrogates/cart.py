"""CART regression trees: variance-reduction splits, compiled with numba.

Trees are stored as flat arrays (feature, threshold, left, right, value);
feature == -1 marks a leaf. Split gain ties break toward the lowest feature
index, then the lowest threshold, which the scan order guarantees. Optional
per-split feature subsampling uses an explicit xorshift64* state so fits are
a pure function of (data, parameters, seed).
"""

from __future__ import annotations

import numpy as np
from numba import njit

_LEAF = -1
_XORSHIFT_MULT = np.uint64(2685821657736338717)


@njit(cache=True, nogil=True, inline="always")
def _next_u64(state):
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * _XORSHIFT_MULT


@njit(cache=True, nogil=True, inline="always")
def _rand_below(state, n):
    return np.int64(_next_u64(state) % np.uint64(n))


@njit(cache=True, nogil=True)
def _choose_features(state, d, m, pool):
    # partial Fisher-Yates, then ascending sort so the scan order (and hence
    # the tie-break) is independent of draw order
    for i in range(d):
        pool[i] = i
    for j in range(m):
        r = j + _rand_below(state, d - j)
        pool[j], pool[r] = pool[r], pool[j]
    for a in range(1, m):
        key = pool[a]
        b = a - 1
        while b >= 0 and pool[b] > key:
            pool[b + 1] = pool[b]
            b -= 1
        pool[b + 1] = key


@njit(cache=True, nogil=True)
def build_tree(X, y, max_depth, min_leaf, n_sub_features, seed):
    """Grow one regression tree; returns (feature, threshold, left, right, value, n_nodes).

    max_depth <= 0 means unbounded. n_sub_features >= d disables subsampling.
    """
    n, d = X.shape
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, _LEAF, dtype=np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, _LEAF, dtype=np.int64)
    right = np.full(max_nodes, _LEAF, dtype=np.int64)
    value = np.zeros(max_nodes)

    idx = np.arange(n)
    buf = np.empty(n, dtype=np.int64)
    pool = np.empty(d, dtype=np.int64)
    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed) | np.uint64(1)  # xorshift state must be nonzero

    # stack of (start, end, depth, node_id)
    stack = np.empty((2 * n + 1, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 2] = 0
    stack[0, 3] = 0
    top = 1
    n_nodes = 1

    m = n_sub_features if n_sub_features < d else d

    while top > 0:
        top -= 1
        start = stack[top, 0]
        end = stack[top, 1]
        depth = stack[top, 2]
        node = stack[top, 3]
        n_node = end - start

        total = 0.0
        y_min = y[idx[start]]
        y_max = y_min
        for i in range(start, end):
            yi = y[idx[i]]
            total += yi
            if yi < y_min:
                y_min = yi
            if yi > y_max:
                y_max = yi
        value[node] = total / n_node

        if n_node < 2 * min_leaf or y_min == y_max or (max_depth > 0 and depth >= max_depth):
            continue

        if m < d:
            _choose_features(state, d, m, pool)
        else:
            for i in range(d):
                pool[i] = i

        best_gain = 0.0
        best_feature = -1
        best_threshold = 0.0
        base = total * total / n_node

        for fi in range(m):
            f = pool[fi]
            xs = np.empty(n_node)
            for i in range(n_node):
                xs[i] = X[idx[start + i], f]
            order = np.argsort(xs)
            # prefix scan over sorted samples; split only between distinct values
            left_sum = 0.0
            for i in range(n_node - 1):
                left_sum += y[idx[start + order[i]]]
                n_left = i + 1
                if n_left < min_leaf or n_node - n_left < min_leaf:
                    continue
                lo_x = xs[order[i]]
                hi_x = xs[order[i + 1]]
                if lo_x == hi_x:
                    continue
                right_sum = total - left_sum
                gain = (
                    left_sum * left_sum / n_left
                    + right_sum * right_sum / (n_node - n_left)
                    - base
                )
                if gain > best_gain:
                    best_gain = gain
                    best_feature = f
                    best_threshold = 0.5 * (lo_x + hi_x)

        if best_feature < 0:
            continue

        # stable partition: left block keeps <= threshold in original order
        n_left = 0
        for i in range(start, end):
            if X[idx[i], best_feature] <= best_threshold:
                buf[n_left] = idx[i]
                n_left += 1
        n_right = 0
        for i in range(start, end):
            if X[idx[i], best_feature] > best_threshold:
                buf[n_left + n_right] = idx[i]
                n_right += 1
        for i in range(n_node):
            idx[start + i] = buf[i]

        feature[node] = best_feature
        threshold[node] = best_threshold
        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        left[node] = left_id
        right[node] = right_id
        stack[top, 0] = start
        stack[top, 1] = start + n_left
        stack[top, 2] = depth + 1
        stack[top, 3] = left_id
        top += 1
        stack[top, 0] = start + n_left
        stack[top, 1] = end
        stack[top, 2] = depth + 1
        stack[top, 3] = right_id
        top += 1

    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes]


@njit(cache=True, nogil=True)
def predict_tree(feature, threshold, left, right, value, X, out):
    for i in range(X.shape[0]):
        node = 0
        while feature[node] != _LEAF:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += value[node]


class RegressionTree:
    """Thin wrapper over the compiled tree kernel.

    max_depth=None grows until min_leaf stops splitting; n_sub_features=None
    considers every feature at every split.
    """

    def __init__(self, max_depth: int | None = None, min_leaf: int = 2,
                 n_sub_features: int | None = None):
        if min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.n_sub_features = n_sub_features
        self._nodes = None

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int = 0) -> "RegressionTree":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be (n, d) with one target per row")
        if X.shape[0] < 1:
            raise ValueError("need at least one sample")
        d = X.shape[1]
        sub = self.n_sub_features if self.n_sub_features is not None else d
        depth = self.max_depth if self.max_depth is not None else 0
        self._nodes = build_tree(X, y, depth, self.min_leaf, sub, np.uint64(seed & (2**64 - 1)))
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self._nodes is None:
            raise ValueError("tree is not fitted")
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros(X.shape[0])
        predict_tree(*self._nodes, X, out)
        return out
