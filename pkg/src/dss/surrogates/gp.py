"""Gaussian process regression with an RBF kernel and Cholesky inference.

Targets are standardized to zero mean / unit variance internally (zero-mean
prior); predictions are mapped back. The kernel matrix gets a jitter ladder
starting at 1e-10 * signal_variance, escalating tenfold per Cholesky failure
up to 1e-4 * signal_variance before giving up.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, cholesky
from scipy.spatial.distance import cdist

from .errors import FitError

_JITTER_START_EXP = -10
_JITTER_STOP_EXP = -4


class GaussianProcess:
    def __init__(self, length_scale: float, signal_variance: float = 1.0,
                 noise_variance: float = 1e-6):
        if length_scale <= 0:
            raise ValueError("length_scale must be > 0")
        if signal_variance <= 0:
            raise ValueError("signal_variance must be > 0")
        if noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")
        self.length_scale = length_scale
        self.signal_variance = signal_variance
        self.noise_variance = noise_variance
        self._X = None
        self._chol = None
        self._alpha = None
        self._y_mean = 0.0
        self._y_std = 1.0
        self.jitter_ = None  # diagonal stabilizer actually used by fit

    def _kernel(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        sq = cdist(A, B, "sqeuclidean")
        return self.signal_variance * np.exp(-sq / (2.0 * self.length_scale**2))

    def fit(self, X: np.ndarray, y: np.ndarray,
            rng: np.random.Generator | None = None) -> "GaussianProcess":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self._y_mean = float(np.mean(y))
        std = float(np.std(y))
        self._y_std = std if std > 1e-12 else 1.0
        z = (y - self._y_mean) / self._y_std

        K = self._kernel(X, X)
        n = K.shape[0]
        chol = None
        exponent = _JITTER_START_EXP
        while exponent <= _JITTER_STOP_EXP:
            jitter = self.signal_variance * 10.0**exponent
            try:
                chol = cholesky(K + (self.noise_variance + jitter) * np.eye(n), lower=True)
                self.jitter_ = jitter
                break
            except np.linalg.LinAlgError:
                exponent += 1
        if chol is None:
            raise FitError(
                f"GP Cholesky failed after jitter escalation to {10.0**_JITTER_STOP_EXP:g}"
                f" * signal_variance"
            )
        self._X = X
        self._chol = chol
        self._alpha = cho_solve((chol, True), z)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self._alpha is None:
            raise ValueError("GP is not fitted")
        X = np.ascontiguousarray(X, dtype=np.float64)
        k_star = self._kernel(X, self._X)
        return self._y_mean + self._y_std * (k_star @ self._alpha)
