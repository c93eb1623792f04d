from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .labels import LabelPair


class LabeledPacket(NamedTuple):
    ts: int  # local-clock timestamp, ns
    frame: bytes
    labels: LabelPair = LabelPair()


@dataclass
class CapturePointData:
    name: str
    link_speed: int = 0
    packets: list = field(default_factory=list)


@dataclass
class CaptureSet:
    """Labeled packets per capture point, keyed by interface name."""
    points: dict = field(default_factory=dict)

    def add_point(self, name: str, link_speed: int = 0) -> CapturePointData:
        point = CapturePointData(name, link_speed)
        self.points[name] = point
        return point

    def __len__(self):
        return sum(len(p.packets) for p in self.points.values())

    def check(self):
        """Raise ValueError if a capture invariant is broken."""
        for name, point in self.points.items():
            last = None
            for p in point.packets:
                if last is not None and p.ts < last:
                    raise ValueError(f"{name}: timestamps decrease at {p.ts}")
                if not 64 <= len(p.frame) <= 1522:
                    raise ValueError(f"{name}: frame length {len(p.frame)} outside [64, 1522]")
                last = p.ts
