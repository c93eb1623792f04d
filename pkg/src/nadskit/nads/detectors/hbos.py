"""Histogram-based outlier score with equal-width bins."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def bin_index(x: np.ndarray, lo: float, hi: float, bins: int) -> np.ndarray:
    """Bin of each value; -1 for values outside [lo, hi].  ``hi`` falls in the last bin."""
    x = np.asarray(x, dtype=float)
    width = (hi - lo) / bins
    idx = np.floor((x - lo) / width).astype(np.int64) if width > 0 else np.zeros(x.shape, np.int64)
    idx = np.minimum(idx, bins - 1)
    return np.where((x < lo) | (x > hi), -1, idx)


@dataclass
class HBOS:
    bins: int = 10
    contamination: float = 0.1
    seed: int = 0
    edges: list = field(default_factory=list)     # (lo, hi) per feature
    heights: list = field(default_factory=list)   # per feature, normalized so max = 1
    floors: list = field(default_factory=list)    # density for out-of-range and empty bins
    threshold: float = float("inf")

    def fit(self, X: np.ndarray) -> "HBOS":
        X = np.asarray(X, dtype=float)
        self.bins = int(self.bins)
        self.edges, self.heights, self.floors = [], [], []
        for f in range(X.shape[1]):
            lo, hi = float(X[:, f].min()), float(X[:, f].max())
            counts = np.bincount(bin_index(X[:, f], lo, hi, self.bins), minlength=self.bins)
            h = counts / counts.max()
            self.edges.append((lo, hi))
            self.heights.append(h)
            self.floors.append(0.5 * float(h[h > 0].min()))
        self.threshold = float(np.quantile(self.score(X), 1.0 - self.contamination, method="higher"))
        return self

    def densities(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape)
        for f, ((lo, hi), h, floor) in enumerate(zip(self.edges, self.heights, self.floors)):
            idx = bin_index(X[:, f], lo, hi, self.bins)
            d = np.where(idx >= 0, h[np.maximum(idx, 0)], floor)
            out[:, f] = np.where(d > 0, d, floor)
        return out

    def score(self, X: np.ndarray) -> np.ndarray:
        """Sum over features of log(1 / density)."""
        return np.sum(-np.log(self.densities(X)), axis=1)

    def state(self) -> dict:
        return {"edges": self.edges, "heights": [h.tolist() for h in self.heights]}
