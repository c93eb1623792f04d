from __future__ import annotations

from ..dataset import labels as L


class Packet:
    """One frame copy in flight.  Treat as immutable once captured: use ``relabel``."""
    __slots__ = ("stream", "seq", "created", "label", "branch", "payload", "patch", "injected")

    def __init__(self, stream, seq, created, label=L.BENIGN, branch=0, payload=None, patch=None,
                 injected=False):
        self.stream = stream
        self.seq = seq
        self.created = created
        self.label = label
        self.branch = branch
        self.payload = payload
        self.patch = patch
        self.injected = injected

    def copy(self) -> "Packet":
        return Packet(self.stream, self.seq, self.created, self.label, self.branch, self.payload,
                      self.patch, self.injected)

    def relabel(self, label: str) -> "Packet":
        p = self.copy()
        p.label = label
        return p

    def __repr__(self):
        return f"Packet({self.stream.id}#{self.seq}, {self.label!r})"
