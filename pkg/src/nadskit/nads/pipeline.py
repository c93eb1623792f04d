"""Filter, window, train, score and evaluate in one call."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .evaluate import EvalReport, evaluate
from .filters import StreamFilter, filter_stream
from .metrics import FEATURES, NOMINAL_NS, closed_windows, compute_window_metrics
from .model import DetectorModel, score_windows, train_detector

TRACE_COLUMNS = ("start_ns", "real_length_ns", "packets") + FEATURES + ("truth", "prediction", "score")


class EmptyTrainingSet(ValueError):
    pass


def stream_windows(capture, f: StreamFilter, nominal: int = NOMINAL_NS, mode: str = "include"):
    """Closed windows of one filtered stream; the trailing partial window is dropped."""
    return closed_windows(compute_window_metrics(filter_stream(capture, f), nominal, mode))


@dataclass
class PipelineResult:
    kind: str
    report: EvalReport
    model: DetectorModel
    windows: list
    predictions: list
    scores: np.ndarray = field(repr=False, default=None)
    train_windows: int = 0

    def trace_tsv(self) -> str:
        lines = ["\t".join(TRACE_COLUMNS)]
        for w, p, s in zip(self.windows, self.predictions, self.scores):
            feats = "\t".join(repr(float(v)) for v in w.features)
            lines.append(f"{w.start}\t{w.real_length}\t{w.packet_count}\t{feats}\t"
                         f"{w.ground_truth}\t{p}\t{float(s)!r}")
        return "\n".join(lines) + "\n"


def run_pipeline(train, test, f: StreamFilter, kind: str, params: Optional[dict] = None,
                 seed: int = 0, nominal: int = NOMINAL_NS, mode: str = "include",
                 test_filter: Optional[StreamFilter] = None) -> PipelineResult:
    """Train ``kind`` on the filtered training capture and evaluate it on the test capture.

    ``train`` and ``test`` may be CaptureSets, PCAPNG paths, or precomputed
    window lists.
    """
    train_w = train if _is_windows(train) else stream_windows(train, f, nominal, mode)
    if not train_w:
        raise EmptyTrainingSet(f"filter {f} leaves no training windows")
    test_w = test if _is_windows(test) else stream_windows(test, test_filter or f, nominal, mode)
    model = train_detector(kind, train_w, params, seed)
    scores = model.scores(test_w)
    preds = score_windows(model, test_w)
    report = evaluate(preds, [w.ground_truth for w in test_w])
    return PipelineResult(kind, report, model, list(test_w), preds, scores, len(train_w))


def _is_windows(obj) -> bool:
    return isinstance(obj, list) and (not obj or hasattr(obj[0], "features"))
