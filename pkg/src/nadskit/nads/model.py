"""Feature normalization, detector training and window scoring."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from .detectors import DETECTORS, KINDS
from .metrics import ABNORMAL_WINDOW, BENIGN_WINDOW, FEATURES

MIN_TRAINING_WINDOWS = 10
_INTERNAL = {"seed", "params", "threshold", "losses", "centers", "radii", "trees", "psi",
             "edges", "heights", "floors"}


class DegenerateFeatureWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Normalization:
    """Per-feature min-max from training data.  Constant features are dropped."""
    mins: tuple
    maxs: tuple
    used: tuple  # indices of features kept

    @classmethod
    def fit(cls, X: np.ndarray, names: Sequence[str] = FEATURES) -> "Normalization":
        X = np.asarray(X, dtype=float)
        mins, maxs = X.min(axis=0), X.max(axis=0)
        used = tuple(int(i) for i in np.flatnonzero(maxs > mins))
        for i in np.flatnonzero(maxs <= mins):
            warnings.warn(f"feature {names[i]!r} is constant in training data; excluded",
                          DegenerateFeatureWarning, stacklevel=3)
        if not used:
            raise ValueError("every feature is constant in the training data")
        return cls(tuple(mins.tolist()), tuple(maxs.tolist()), used)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Scale to the training range; test values outside it are not clamped."""
        X = np.asarray(X, dtype=float)
        u = list(self.used)
        lo = np.array(self.mins)[u]
        span = np.array(self.maxs)[u] - lo
        return (X[:, u] - lo) / span


def detector_params(kind: str) -> tuple:
    """Names of the user-settable parameters of a detector kind."""
    if kind not in DETECTORS:
        raise ValueError(f"unknown detector {kind!r}; choose one of {', '.join(KINDS)}")
    return tuple(f.name for f in fields(DETECTORS[kind]) if f.name not in _INTERNAL)


def coerce_params(kind: str, params: Optional[dict]) -> dict:
    """Convert string parameter values to the types of the detector's defaults."""
    allowed = detector_params(kind)
    out = {}
    defaults = DETECTORS[kind]()
    for key, value in (params or {}).items():
        if key not in allowed:
            raise ValueError(f"detector {kind!r} has no parameter {key!r}; known: {', '.join(allowed)}")
        current = getattr(defaults, key)
        if isinstance(value, str):
            value = int(value) if isinstance(current, int) and not isinstance(current, bool) else float(value)
        out[key] = value
    return out


def feature_matrix(windows) -> np.ndarray:
    return np.array([w.features for w in windows], dtype=float).reshape(len(windows), len(FEATURES))


@dataclass
class DetectorModel:
    kind: str
    normalization: Normalization
    params: dict
    detector: object = field(repr=False, default=None)

    @property
    def threshold(self) -> float:
        return self.detector.threshold

    def scores(self, windows) -> np.ndarray:
        if not len(windows):
            return np.zeros(0)
        return self.detector.score(self.normalization.apply(feature_matrix(windows)))


def train_detector(kind: str, windows, params: Optional[dict] = None, seed: int = 0) -> DetectorModel:
    """Fit normalization and a detector of ``kind`` on (assumed benign) training windows."""
    params = coerce_params(kind, params)
    if len(windows) < MIN_TRAINING_WINDOWS:
        raise ValueError(f"need at least {MIN_TRAINING_WINDOWS} training windows, got {len(windows)}")
    X = feature_matrix(windows)
    norm = Normalization.fit(X)
    det = DETECTORS[kind](seed=seed, **params).fit(norm.apply(X))
    return DetectorModel(kind, norm, params, det)


def score_windows(model: DetectorModel, windows) -> list[str]:
    """Per-window prediction: abnormal iff the detector score exceeds its threshold."""
    return [ABNORMAL_WINDOW if s > model.threshold else BENIGN_WINDOW for s in model.scores(windows)]
