"""Packet-triggered observation windows and their four features.

A window opens at a packet and closes at the first packet whose timestamp is
at least ``open + nominal``.  By default that trigger packet is the last
member and the window's real length runs up to it (``mode="include"``); with
``mode="next"`` the trigger instead opens the following window.

Features are computed exactly with integers and fractions and converted to
float once:

* bandwidth: total frame bits / real length (bit/s)
* avg_frame_size: mean frame length (bytes)
* avg_frame_gap: mean inter-arrival time, ``(last - first) / (n - 1)`` (ns)
* avg_cycle_jitter: mean absolute deviation of the inter-arrivals from their
  median (ns)

Windows with fewer than two packets have gap and jitter 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..dataset.labels import BENIGN

NOMINAL_NS = 100_000_000
FEATURES = ("bandwidth", "avg_frame_size", "avg_frame_gap", "avg_cycle_jitter")
BENIGN_WINDOW = "benign"
ABNORMAL_WINDOW = "abnormal"


@dataclass(frozen=True)
class MetricWindow:
    start: int
    nominal_length: int
    real_length: int
    bandwidth: float
    avg_frame_size: float
    avg_frame_gap: float
    avg_cycle_jitter: float
    packet_count: int
    ground_truth: str = BENIGN_WINDOW
    # False for a trailing window that ran out of packets before its nominal end
    closed: bool = True
    first_index: int = 0

    @property
    def features(self) -> tuple:
        return (self.bandwidth, self.avg_frame_size, self.avg_frame_gap, self.avg_cycle_jitter)

    @property
    def abnormal(self) -> bool:
        return self.ground_truth == ABNORMAL_WINDOW


def derive_ground_truth(window, members) -> str:
    """Abnormal iff any member carries a packet label other than BENIGN."""
    for p in members:
        if p.labels.packet != BENIGN:
            return ABNORMAL_WINDOW
    return BENIGN_WINDOW


def window_features(ts: Sequence[int], sizes: Sequence[int], real_length: int) -> tuple:
    """Exact feature values of one window as Fractions."""
    n = len(ts)
    bandwidth = Fraction(8 * sum(sizes) * 1_000_000_000, real_length)
    size = Fraction(sum(sizes), n)
    if n < 2:
        return bandwidth, size, Fraction(0), Fraction(0)
    gaps = sorted(b - a for a, b in zip(ts, ts[1:]))
    m = len(gaps)
    mid = gaps[(m - 1) // 2] + gaps[m // 2]  # twice the median
    gap = Fraction(ts[-1] - ts[0], n - 1)
    jitter = Fraction(sum(abs(2 * g - mid) for g in gaps), 2 * m)
    return bandwidth, size, gap, jitter


def window_bounds(ts: Sequence[int], nominal: int, mode: str = "include"):
    """Yield ``(first, last_exclusive, real_length, closed)`` index ranges."""
    if mode not in ("include", "next"):
        raise ValueError(f"unknown window mode {mode!r}")
    n = len(ts)
    i = 0
    while i < n:
        open_t = ts[i]
        j = i
        while j < n and ts[j] < open_t + nominal:
            j += 1
        if j == n:
            yield i, n, max(nominal, ts[n - 1] - open_t), False
            return
        real = ts[j] - open_t
        if mode == "include":
            yield i, j + 1, real, True
            i = j + 1
        else:
            yield i, j, real, True
            i = j


def compute_window_metrics(packets, nominal: int = NOMINAL_NS, mode: str = "include") -> list[MetricWindow]:
    """Windows over a time-ordered packet sequence (objects with ``ts``, ``frame``, ``labels``)."""
    if nominal <= 0:
        raise ValueError("nominal window length must be > 0")
    ts = [p.ts for p in packets]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("packets must be time-ordered")
    sizes = [len(p.frame) for p in packets]
    out = []
    for i, j, real, closed in window_bounds(ts, nominal, mode):
        bw, size, gap, jit = window_features(ts[i:j], sizes[i:j], real)
        w = MetricWindow(ts[i], nominal, real, float(bw), float(size), float(gap), float(jit),
                         j - i, BENIGN_WINDOW, closed, i)
        truth = derive_ground_truth(w, packets[i:j])
        if truth != BENIGN_WINDOW:
            w = MetricWindow(**{**w.__dict__, "ground_truth": truth})
        out.append(w)
    return out


def closed_windows(windows) -> list[MetricWindow]:
    return [w for w in windows if w.closed]
