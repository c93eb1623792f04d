"""Isolation forest written out in numpy, with pre-assigned per-tree seeds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ...rng import generator

EULER_GAMMA = 0.5772156649015329


def average_path_length(n) -> float:
    """Expected path length of an unsuccessful BST search among n points."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


def build_tree(X: np.ndarray, rng: np.random.Generator, limit: int) -> list:
    """Flat node list; internal nodes are (feature, split, left, right), leaves (-1, size)."""
    nodes = []

    def grow(idx, depth):
        me = len(nodes)
        nodes.append(None)
        sub = X[idx]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        usable = np.flatnonzero(hi > lo)
        if depth >= limit or len(idx) <= 1 or len(usable) == 0:
            nodes[me] = (-1, len(idx))
            return me
        f = int(usable[rng.integers(len(usable))])
        split = float(rng.uniform(lo[f], hi[f]))
        left_mask = sub[:, f] < split
        left = grow(idx[left_mask], depth + 1)
        right = grow(idx[~left_mask], depth + 1)
        nodes[me] = (f, split, left, right)
        return me

    grow(np.arange(len(X)), 0)
    return nodes


def path_length(tree: list, x) -> float:
    node, depth = 0, 0
    while True:
        entry = tree[node]
        if entry[0] < 0:
            return depth + average_path_length(entry[1])
        f, split, left, right = entry
        node = left if x[f] < split else right
        depth += 1


@dataclass
class IsolationForest:
    n_trees: int = 100
    max_samples: int = 256
    contamination: float = 0.1
    seed: int = 0
    trees: list = field(default_factory=list)
    psi: int = 0
    threshold: float = 1.0

    def fit(self, X: np.ndarray) -> "IsolationForest":
        X = np.asarray(X, dtype=float)
        self.psi = min(int(self.max_samples), len(X))
        limit = math.ceil(math.log2(max(self.psi, 2)))
        self.trees = []
        for t in range(int(self.n_trees)):
            rng = generator(self.seed, "iforest", t)
            idx = rng.choice(len(X), size=self.psi, replace=False)
            self.trees.append(build_tree(X[idx], rng, limit))
        self.threshold = float(np.quantile(self.score(X), 1.0 - self.contamination, method="higher"))
        return self

    def mean_path_lengths(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.array([np.mean([path_length(t, x) for t in self.trees]) for x in X])

    def score(self, X: np.ndarray) -> np.ndarray:
        """s(x) = 2^(-E[h(x)] / c(psi)), in (0, 1)."""
        c = average_path_length(self.psi) or 1.0
        return np.power(2.0, -self.mean_path_lengths(X) / c)

    def state(self) -> dict:
        return {"psi": self.psi, "trees": len(self.trees)}
