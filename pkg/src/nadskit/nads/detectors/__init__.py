"""Interchangeable window detectors.

Every detector is fitted on normalized training features and exposes
``score(X)``; a window is abnormal iff its score exceeds ``threshold``.
"""
from .autoencoder import Autoencoder
from .hbos import HBOS
from .iforest import IsolationForest
from .meanshift import MeanShiftDetector

DETECTORS = {
    "autoencoder": Autoencoder,
    "mean_shift": MeanShiftDetector,
    "isolation_forest": IsolationForest,
    "hbos": HBOS,
}
KINDS = tuple(DETECTORS)

__all__ = ["Autoencoder", "HBOS", "IsolationForest", "MeanShiftDetector", "DETECTORS", "KINDS"]
