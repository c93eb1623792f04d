"""Stream filters over captured Ethernet frames."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable, NamedTuple, Optional

KEYS = ("iface", "vlan", "pcp", "dmac", "udp_dst", "dir")
_INT_KEYS = {"vlan", "pcp", "udp_dst"}


class FrameHeader(NamedTuple):
    dmac: str
    smac: str
    vlan: Optional[int]
    pcp: Optional[int]
    ethertype: int
    udp_dst: Optional[int]


def format_mac(raw: bytes) -> str:
    return ":".join(f"{b:02x}" for b in raw)


def parse_header(frame: bytes) -> FrameHeader:
    dmac = format_mac(frame[0:6])
    smac = format_mac(frame[6:12])
    etype = int.from_bytes(frame[12:14], "big")
    off = 14
    vlan = pcp = None
    if etype == 0x8100 and len(frame) >= 18:
        tci = int.from_bytes(frame[14:16], "big")
        pcp, vlan = tci >> 13, tci & 0x0FFF
        etype = int.from_bytes(frame[16:18], "big")
        off = 18
    udp_dst = None
    if etype == 0x0800 and len(frame) >= off + 20:
        ihl = (frame[off] & 0x0F) * 4
        if frame[off + 9] == 17 and len(frame) >= off + ihl + 4:
            udp_dst = int.from_bytes(frame[off + ihl + 2:off + ihl + 4], "big")
    return FrameHeader(dmac, smac, vlan, pcp, etype, udp_dst)


@dataclass(frozen=True)
class StreamFilter:
    """Conjunction of optional header/interface criteria; at least one must be set."""
    iface: Optional[str] = None
    vlan: Optional[int] = None
    pcp: Optional[int] = None
    dmac: Optional[str] = None
    udp_dst: Optional[int] = None
    dir: Optional[str] = None

    def __post_init__(self):
        if all(getattr(self, k) is None for k in KEYS):
            raise ValueError("a stream filter needs at least one criterion")
        if self.dmac is not None:
            object.__setattr__(self, "dmac", self.dmac.lower())
        if self.dir is not None and self.dir not in ("in", "out"):
            raise ValueError(f"filter direction must be 'in' or 'out', not {self.dir!r}")

    @classmethod
    def parse(cls, expr: str) -> "StreamFilter":
        """Parse ``key=value`` pairs separated by commas, e.g. ``udp_dst=1200,dir=in``."""
        kwargs = {}
        for part in expr.split(","):
            part = part.strip()
            if not part:
                continue
            key, sep, value = part.partition("=")
            key = key.strip()
            if not sep or key not in KEYS:
                raise ValueError(f"bad filter term {part!r}; keys are {', '.join(KEYS)}")
            value = value.strip()
            kwargs[key] = int(value, 0) if key in _INT_KEYS else value
        return cls(**kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "StreamFilter":
        unknown = set(d) - set(KEYS)
        if unknown:
            raise ValueError(f"unknown filter keys {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}

    def __str__(self):
        return ",".join(f"{k}={v}" for k, v in self.to_dict().items())

    def matches_interface(self, iface_name: str) -> bool:
        if self.iface is not None and iface_name != self.iface:
            return False
        if self.dir is not None and not iface_name.endswith("-" + self.dir):
            return False
        return True

    def matches_header(self, h: FrameHeader) -> bool:
        return ((self.vlan is None or h.vlan == self.vlan)
                and (self.pcp is None or h.pcp == self.pcp)
                and (self.dmac is None or h.dmac == self.dmac)
                and (self.udp_dst is None or h.udp_dst == self.udp_dst))

    def matches(self, frame: bytes, iface_name: str = "") -> bool:
        return self.matches_interface(iface_name) and self.matches_header(parse_header(frame))


def filter_stream(capture, f: StreamFilter) -> list:
    """Order-preserving subsequence of captured packets matching every set criterion.

    ``capture`` is a CaptureSet, a path to a PCAPNG file, or an iterable of
    ``(interface_name, packets)`` pairs.
    """
    from ..dataset.capture import CaptureSet
    from ..dataset.pcapng import read_capture

    if isinstance(capture, (str, bytes)) or hasattr(capture, "__fspath__"):
        capture = read_capture(capture)
    points: Iterable = capture.points.items() if isinstance(capture, CaptureSet) else capture
    out = []
    used = 0
    for name, point in points:
        if not f.matches_interface(name):
            continue
        used += 1
        pkts = point.packets if hasattr(point, "packets") else point
        if hasattr(pkts, "select"):
            out.extend(pkts.select(f.matches_header))
        else:
            out.extend(p for p in pkts if f.matches_header(parse_header(p.frame)))
    if used > 1:
        # several interfaces matched: merge into one time line (stable)
        out.sort(key=lambda p: p.ts)
    return out
