"""Confusion counts and precision/recall over window predictions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .metrics import ABNORMAL_WINDOW

REPORT_COLUMNS = ("tp", "fp", "tn", "fn", "precision", "recall")


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int

    @classmethod
    def from_counts(cls, tp=0, fp=0, tn=0, fn=0) -> "EvalReport":
        return cls(tp, fp, tn, fn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def precision(self) -> Optional[float]:
        """None when nothing was predicted abnormal."""
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else None

    @property
    def recall(self) -> Optional[float]:
        """None when no window is truly abnormal."""
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None

    def row(self) -> list[str]:
        return [str(self.tp), str(self.fp), str(self.tn), str(self.fn),
                fmt_ratio(self.precision), fmt_ratio(self.recall)]

    def to_tsv(self) -> str:
        return "\t".join(REPORT_COLUMNS) + "\n" + "\t".join(self.row()) + "\n"

    @classmethod
    def from_tsv(cls, text: str) -> "EvalReport":
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        head, vals = lines[0].split("\t"), lines[1].split("\t")
        d = dict(zip(head, vals))
        return cls(int(d["tp"]), int(d["fp"]), int(d["tn"]), int(d["fn"]))


def fmt_ratio(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.6f}"


def evaluate(predictions: Sequence[str], truth: Sequence[str]) -> EvalReport:
    """Count abnormal-as-positive outcomes."""
    if len(predictions) != len(truth):
        raise ValueError(f"{len(predictions)} predictions for {len(truth)} windows")
    tp = fp = tn = fn = 0
    for p, t in zip(predictions, truth):
        pos, real = p == ABNORMAL_WINDOW, t == ABNORMAL_WINDOW
        if pos and real:
            tp += 1
        elif pos:
            fp += 1
        elif real:
            fn += 1
        else:
            tn += 1
    return EvalReport(tp, fp, tn, fn)
