"""Small fully-connected autoencoder trained with plain per-sample SGD."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ...rng import generator

HIDDEN = 32
CODE = 4
LAYERS = ("W1", "b1", "W2", "b2", "W3", "b3", "W4", "b4")


def init_params(d: int, rng: np.random.Generator, hidden: int = HIDDEN, code: int = CODE) -> dict:
    """He-normal weights, zero biases, for d -> hidden -> code -> hidden -> d."""
    sizes = [(d, hidden), (hidden, code), (code, hidden), (hidden, d)]
    params = {}
    for i, (a, b) in enumerate(sizes, 1):
        params[f"W{i}"] = rng.normal(0.0, np.sqrt(2.0 / a), size=(a, b))
        params[f"b{i}"] = np.zeros(b)
    return params


def forward(params: dict, x: np.ndarray) -> np.ndarray:
    """Reconstruction of a batch ``x`` of shape (n, d)."""
    h = np.maximum(x @ params["W1"] + params["b1"], 0.0)
    h = np.maximum(h @ params["W2"] + params["b2"], 0.0)
    h = np.maximum(h @ params["W3"] + params["b3"], 0.0)
    return h @ params["W4"] + params["b4"]


def loss_and_grads(params: dict, x: np.ndarray) -> tuple[float, dict]:
    """Squared reconstruction error of one sample and its gradient w.r.t. every parameter."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    z1 = x @ params["W1"] + params["b1"]
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ params["W2"] + params["b2"]
    h2 = np.maximum(z2, 0.0)
    z3 = h2 @ params["W3"] + params["b3"]
    h3 = np.maximum(z3, 0.0)
    y = h3 @ params["W4"] + params["b4"]
    err = y - x
    loss = float(np.sum(err * err))

    g = {}
    dy = 2.0 * err
    g["W4"] = h3.T @ dy
    g["b4"] = dy[0]
    dz3 = (dy @ params["W4"].T) * (z3 > 0)
    g["W3"] = h2.T @ dz3
    g["b3"] = dz3[0]
    dz2 = (dz3 @ params["W3"].T) * (z2 > 0)
    g["W2"] = h1.T @ dz2
    g["b2"] = dz2[0]
    dz1 = (dz2 @ params["W2"].T) * (z1 > 0)
    g["W1"] = x.T @ dz1
    g["b1"] = dz1[0]
    return loss, g


def reconstruction_errors(params: dict, X: np.ndarray) -> np.ndarray:
    err = forward(params, X) - X
    return np.sum(err * err, axis=1)


@dataclass
class Autoencoder:
    lr: float = 1e-3
    epochs: int = 3
    quantile: float = 0.99
    seed: int = 0
    params: dict = field(default_factory=dict)
    threshold: float = float("inf")
    losses: list = field(default_factory=list)

    def fit(self, X: np.ndarray) -> "Autoencoder":
        X = np.asarray(X, dtype=float)
        init_rng = generator(self.seed, "autoencoder", "init")
        order_rng = generator(self.seed, "autoencoder", "shuffle")
        self.params = init_params(X.shape[1], init_rng)
        self.losses = []
        for _ in range(int(self.epochs)):
            total = 0.0
            for i in order_rng.permutation(len(X)):
                loss, g = loss_and_grads(self.params, X[i])
                total += loss
                for k in LAYERS:
                    self.params[k] -= self.lr * g[k]
            self.losses.append(total / max(len(X), 1))
        self.threshold = float(np.quantile(self.score(X), self.quantile, method="higher"))
        return self

    def score(self, X: np.ndarray) -> np.ndarray:
        return reconstruction_errors(self.params, np.asarray(X, dtype=float))

    def state(self) -> dict:
        return {k: v.tolist() for k, v in self.params.items()}
