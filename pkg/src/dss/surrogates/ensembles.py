"""Random forest and gradient boosting regressors built on the CART kernel."""

from __future__ import annotations

import math

import numpy as np

from .cart import RegressionTree


class RandomForest:
    """Bagged regression trees with per-split feature subsampling.

    Bootstrap samples are the size of the training set; each split considers
    ceil(d/3) features. Prediction is the mean of the tree outputs.
    """

    def __init__(self, n_trees: int = 256, max_depth: int | None = None, min_leaf: int = 2):
        if n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self._trees: list[RegressionTree] = []

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = X.shape
        n_sub = math.ceil(d / 3)
        self._trees = []
        for _ in range(self.n_trees):
            boot = rng.integers(0, n, size=n)
            seed = int(rng.integers(1, 2**63))
            tree = RegressionTree(self.max_depth, self.min_leaf, n_sub)
            tree.fit(X[boot], y[boot], seed=seed)
            self._trees.append(tree)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if not self._trees:
            raise ValueError("forest is not fitted")
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros(X.shape[0])
        for tree in self._trees:
            out += tree.predict(X)
        return out / self.n_trees


class GradientBoosting:
    """Stagewise squared-error boosting of depth-limited regression trees.

    Starts from mean(y); every round fits a tree to the current residuals and
    adds learning_rate times its prediction. Deterministic: no bootstrap, no
    feature subsampling.
    """

    def __init__(self, n_rounds: int = 300, learning_rate: float = 0.1,
                 max_depth: int = 3, min_leaf: int = 2):
        if n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if not 0.0 < learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self._base = 0.0
        self._trees: list[RegressionTree] = []
        self.train_sse_path: list[float] = []

    def fit(self, X: np.ndarray, y: np.ndarray,
            rng: np.random.Generator | None = None) -> "GradientBoosting":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self._base = float(np.mean(y))
        residual = y - self._base
        self._trees = []
        self.train_sse_path = [float(np.dot(residual, residual))]
        for _ in range(self.n_rounds):
            tree = RegressionTree(self.max_depth, self.min_leaf, None)
            tree.fit(X, residual, seed=0)
            residual = residual - self.learning_rate * tree.predict(X)
            self._trees.append(tree)
            self.train_sse_path.append(float(np.dot(residual, residual)))
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if not self._trees:
            raise ValueError("model is not fitted")
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.full(X.shape[0], self._base)
        for tree in self._trees:
            out += self.learning_rate * tree.predict(X)
        return out
