"""Time-aware gates and credit-based shaping for one egress port."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


class UnschedulableError(RuntimeError):
    pass


@dataclass
class GateSchedule:
    """Repeating gate control list.

    ``gates`` maps a PCP to its open intervals ``[start, end)`` inside one
    cycle.  PCPs without an entry are always open.  ``offset`` shifts the
    whole schedule in time.
    """
    cycle: int
    gates: dict = field(default_factory=dict)
    offset: int = 0

    def __post_init__(self):
        self._spans = {}
        self._last = {}
        for pcp, intervals in self.gates.items():
            ivs = sorted((int(s), int(e)) for s, e in intervals)
            for s, e in ivs:
                if not 0 <= s < e <= self.cycle:
                    raise ValueError(f"interval [{s}, {e}) outside cycle {self.cycle}")
            for (s0, e0), (s1, e1) in zip(ivs, ivs[1:]):
                if s1 < e0:
                    raise ValueError(f"overlapping intervals for pcp {pcp}")
            self._spans[pcp] = _cyclic_spans(ivs, self.cycle)

    def longest_open(self, pcp: int) -> float:
        spans = self._spans.get(pcp)
        if spans is None:
            return math.inf
        return max((e - s for s, e in spans), default=0)

    def earliest(self, pcp: int, ready_at: int, tx_duration: int) -> int:
        # fast path: the absolute open span found last time still fits
        hit = self._last.get(pcp)
        if hit is not None and hit[0] <= ready_at and ready_at + tx_duration <= hit[1]:
            return ready_at
        spans = self._spans.get(pcp)
        if spans is None:
            return ready_at
        if spans and spans[0] == (0, math.inf):
            return ready_at
        cyc = self.cycle
        base = ready_at - (ready_at - self.offset) % cyc
        for k in (-1, 0, 1, 2):
            shift = base + k * cyc
            for s, e in spans:
                t = shift + s
                if t < ready_at:
                    t = ready_at
                if t + tx_duration <= shift + e:
                    self._last[pcp] = (shift + s, shift + e)
                    return t
        raise UnschedulableError(
            f"no open interval of pcp {pcp} fits a {tx_duration} ns transmission")


def _cyclic_spans(ivs, cycle):
    """Merge adjacent intervals, including across the cycle boundary."""
    merged = []
    for s, e in ivs:
        if merged and merged[-1][1] == s:
            merged[-1] = (merged[-1][0], e)
        else:
            merged.append((s, e))
    if not merged:
        return []
    if merged[0] == (0, cycle):
        return [(0, math.inf)]
    if len(merged) > 1 and merged[0][0] == 0 and merged[-1][1] == cycle:
        first = merged.pop(0)
        last = merged.pop()
        merged.append((last[0], cycle + first[1]))
    return merged


def tas_gate_transmit_time(sched: GateSchedule, pcp: int, ready_at: int, tx_duration: int) -> int:
    """Earliest start ``t >= ready_at`` whose whole transmission fits one open interval."""
    if tx_duration > sched.longest_open(pcp):
        raise UnschedulableError(
            f"pcp {pcp}: {tx_duration} ns frame longer than every open interval")
    return sched.earliest(pcp, ready_at, tx_duration)


@dataclass
class CreditState:
    """Credit (bits) of one CBS queue, valid at ``last_update`` (ns)."""
    credit: float
    idle_slope: float
    send_slope: float
    last_update: int = 0

    @classmethod
    def for_link(cls, idle_slope: float, link_rate: float, now: int = 0) -> "CreditState":
        return cls(0.0, idle_slope, idle_slope - link_rate, now)

    def settle_idle(self, now: int):
        """Queue was empty since ``last_update``: recover negative credit, drop positive."""
        if now <= self.last_update:
            return
        if self.credit < 0:
            self.credit = min(0.0, self.credit + self.idle_slope * (now - self.last_update) * 1e-9)
        else:
            self.credit = 0.0
        self.last_update = now

    def eligible_at(self, now: int) -> int:
        """Earliest time credit is non-negative, assuming the queue waits from ``last_update``."""
        c = self.credit
        if now > self.last_update:
            c += self.idle_slope * (now - self.last_update) * 1e-9
        if c >= 0:
            return now
        return now + math.ceil(-c * 1e9 / self.idle_slope)

    def commit(self, start: int, tx_duration: int):
        c = self.credit
        if start > self.last_update:
            c += self.idle_slope * (start - self.last_update) * 1e-9
        self.credit = c + self.send_slope * tx_duration * 1e-9
        self.last_update = start + tx_duration


def cbs_transmit_time(state: CreditState, now: int, tx_duration: int) -> tuple[int, CreditState]:
    """Start time of the head frame and the credit state after sending it."""
    if state.idle_slope <= 0:
        raise ValueError("idle slope must be positive")
    start = state.eligible_at(now)
    after = replace(state)
    after.commit(start, tx_duration)
    return start, after
