"""Run statistics and their TSV form."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class ListenerStats:
    stream: str
    listener: str
    received: int = 0
    injected: int = 0
    duplicates: int = 0
    latency_min: float = math.inf
    latency_max: float = 0
    latency_sum: int = 0

    def add(self, latency: int, injected: bool = False):
        self.received += 1
        if injected:
            self.injected += 1
        self.latency_sum += latency
        if latency < self.latency_min:
            self.latency_min = latency
        if latency > self.latency_max:
            self.latency_max = latency

    @property
    def jitter(self) -> float:
        """Latency spread (max - min) in ns."""
        return self.latency_max - self.latency_min if self.received else math.nan

    @property
    def latency_mean(self) -> float:
        return self.latency_sum / self.received if self.received else math.nan


@dataclass
class StreamCopies:
    """Frame-copy accounting of one stream; replication creates copies, sinks remove them."""
    stream: str
    sent: int = 0
    created: int = 0
    injected: int = 0
    delivered: int = 0
    frer_eliminated: int = 0
    anomaly_eliminated: int = 0
    queue_dropped: int = 0
    in_flight: int = 0

    @property
    def balanced(self) -> bool:
        return self.created == (self.delivered + self.frer_eliminated + self.anomaly_eliminated
                                + self.queue_dropped + self.in_flight)


@dataclass
class PortStats:
    port: str
    frames: int = 0
    bytes: int = 0
    drops: int = 0
    max_queue: int = 0
    streams: int = 0


@dataclass
class StatsReport:
    scenario: str
    seed: int
    duration_ns: int
    listeners: list = field(default_factory=list)
    copies: list = field(default_factory=list)
    ports: list = field(default_factory=list)
    captures: dict = field(default_factory=dict)
    anomaly_actions: dict = field(default_factory=dict)

    def listener(self, stream: str, node: str) -> ListenerStats:
        for ls in self.listeners:
            if ls.stream == stream and ls.listener == node:
                return ls
        raise KeyError((stream, node))

    def stream(self, stream: str) -> StreamCopies:
        for c in self.copies:
            if c.stream == stream:
                return c
        raise KeyError(stream)

    def conservation_violations(self) -> list[str]:
        return [c.stream for c in self.copies if not c.balanced]

    @property
    def total_drops(self) -> int:
        return sum(p.drops for p in self.ports)

    def to_tsv(self) -> str:
        lines = [f"# scenario\t{self.scenario}", f"# seed\t{self.seed}",
                 f"# duration_ns\t{self.duration_ns}",
                 "section\tstream\tlistener\tsent\treceived\tmin_latency_ns\tmax_latency_ns\t"
                 "jitter_ns\tmean_latency_ns\tinjected\tduplicates"]
        sent = {c.stream: c.sent for c in self.copies}
        for ls in self.listeners:
            if ls.received:
                lo, hi = int(ls.latency_min), int(ls.latency_max)
                lat = f"{lo}\t{hi}\t{hi - lo}\t{ls.latency_mean:.1f}"
            else:
                lat = "\t\t\t"
            lines.append(f"listener\t{ls.stream}\t{ls.listener}\t{sent[ls.stream]}\t{ls.received}\t"
                         f"{lat}\t{ls.injected}\t{ls.duplicates}")
        lines.append("section\tstream\tsent\tcreated\tinjected\tdelivered\tfrer_eliminated\t"
                     "anomaly_eliminated\tqueue_dropped\tin_flight")
        for c in self.copies:
            lines.append(f"copies\t{c.stream}\t{c.sent}\t{c.created}\t{c.injected}\t{c.delivered}\t"
                         f"{c.frer_eliminated}\t{c.anomaly_eliminated}\t{c.queue_dropped}\t{c.in_flight}")
        lines.append("section\tport\tframes\tbytes\tdrops\tmax_queue\tstreams")
        for p in sorted(self.ports, key=lambda p: p.port):
            lines.append(f"port\t{p.port}\t{p.frames}\t{p.bytes}\t{p.drops}\t{p.max_queue}\t{p.streams}")
        lines.append("section\tcapture_point\tpackets")
        for name, n in sorted(self.captures.items()):
            lines.append(f"capture\t{name}\t{n}")
        lines.append("section\tanomaly\tactions")
        for name, n in sorted(self.anomaly_actions.items()):
            lines.append(f"anomaly\t{name}\t{n}")
        return "\n".join(lines) + "\n"
