"""Pure-numpy versions of the compiled kernels, used when the extension is absent."""
from __future__ import annotations

import numpy as np


def _sqdist(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # explicit differences, not the ||x||^2 - 2xy + ||y||^2 expansion, so
    # results agree with the compiled loops to rounding
    return ((X[:, None, :] - Y[None, :, :]) ** 2).sum(-1)


def assign_labels(X: np.ndarray, C: np.ndarray, chunk: int = 512):
    n = X.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    for s in range(0, n, chunk):
        d2 = _sqdist(X[s:s + chunk], C)
        labels[s:s + chunk] = d2.argmin(1)
        dist[s:s + chunk] = d2[np.arange(d2.shape[0]), labels[s:s + chunk]]
    return labels, dist


def silhouette_samples(X: np.ndarray, labels: np.ndarray, k: int, chunk: int = 256) -> np.ndarray:
    n = X.shape[0]
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    out = np.zeros(n)
    for s in range(0, n, chunk):
        D = np.sqrt(_sqdist(X[s:s + chunk], X))
        sums = D @ onehot
        own = labels[s:s + chunk]
        rows = np.arange(len(own))
        with np.errstate(divide="ignore", invalid="ignore"):
            a = sums[rows, own] / (counts[own] - 1.0)
            means = sums / counts[None, :]
        means[rows, own] = np.inf
        means[:, counts == 0] = np.inf
        b = means.min(1)
        m = np.maximum(a, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            sil = np.where(m > 0, (b - a) / m, 0.0)
        sil[counts[own] <= 1] = 0.0
        out[s:s + chunk] = sil
    return out
