"""Flat-kernel mean-shift clustering used as a radius-based novelty detector."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


def median_pairwise_distance(X: np.ndarray) -> float:
    X = np.asarray(X, dtype=float)
    if len(X) < 2:
        return 0.0
    d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    return float(np.median(d[np.triu_indices(len(X), 1)]))


def mean_shift_modes(X: np.ndarray, bandwidth: float, max_iter: int = 300, tol: float = 1e-7) -> np.ndarray:
    """Shift every point to the mean of its flat-kernel neighbourhood until it stops moving.

    Converged points closer than ``bandwidth`` to an already kept mode are
    merged into it, more populated modes first.
    """
    X = np.asarray(X, dtype=float)
    modes = []
    for x in X:
        m = x.copy()
        for _ in range(max_iter):
            near = X[np.linalg.norm(X - m, axis=1) <= bandwidth]
            if len(near) == 0:
                break
            new = near.mean(axis=0)
            done = np.linalg.norm(new - m) <= tol * max(bandwidth, 1e-12)
            m = new
            if done:
                break
        support = int(np.sum(np.linalg.norm(X - m, axis=1) <= bandwidth))
        modes.append((support, tuple(m)))
    # most supported first; ties broken by coordinates for determinism
    modes.sort(key=lambda t: (-t[0], t[1]))
    kept = []
    for _, m in modes:
        m = np.array(m)
        if all(np.linalg.norm(m - k) > bandwidth for k in kept):
            kept.append(m)
    return np.array(kept)


@dataclass
class MeanShiftDetector:
    bandwidth: Optional[float] = None
    scale: float = 1.1
    seed: int = 0
    centers: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    radii: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def threshold(self) -> float:
        return float(self.scale)

    def fit(self, X: np.ndarray) -> "MeanShiftDetector":
        X = np.asarray(X, dtype=float)
        bw = self.bandwidth if self.bandwidth is not None else median_pairwise_distance(X)
        if bw <= 0:
            bw = 1e-12
        self.bandwidth = float(bw)
        self.centers = mean_shift_modes(X, self.bandwidth)
        dist = np.linalg.norm(X[:, None, :] - self.centers[None, :, :], axis=2)
        owner = np.argmin(dist, axis=1)
        self.radii = np.array([dist[owner == k, k].max() if np.any(owner == k) else 0.0
                               for k in range(len(self.centers))])
        return self

    def score(self, X: np.ndarray) -> np.ndarray:
        """Smallest ratio distance / radius over clusters; benign iff <= scale."""
        X = np.asarray(X, dtype=float)
        dist = np.linalg.norm(X[:, None, :] - self.centers[None, :, :], axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(self.radii > 0, dist / np.where(self.radii > 0, self.radii, 1.0),
                             np.where(dist == 0, 0.0, np.inf))
        return ratio.min(axis=1)

    def state(self) -> dict:
        return {"bandwidth": self.bandwidth, "centers": self.centers.tolist(), "radii": self.radii.tolist()}
