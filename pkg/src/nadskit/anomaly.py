"""Anomaly hooks attached to switch ports.

Each configured anomaly becomes an ``AnomalyHook`` sitting on one port
direction.  A hook sees every frame copy passing that point, decides per
candidate whether to act, and emits zero or more (possibly relabelled) copies
back to the simulator.  Decisions come from the anomaly's own random
sub-stream so other traffic cannot perturb them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .config import AnomalyConfig, Phase
from .dataset import labels as L
from .rng import Substream


def is_active(phase: Phase, t: int) -> bool:
    """Square wave: active for ``active_ns`` out of every ``active_ns + inactive_ns`` from start."""
    if t < phase.start_ns:
        return False
    period = phase.active_ns + phase.inactive_ns
    return (t - phase.start_ns) % period < phase.active_ns


def phase_active(phase: Phase, t: int) -> Optional[str]:
    """The phase label if ``t`` lies in an active interval, else None."""
    return phase.label if is_active(phase, t) else None


def next_active(phase: Phase, t: int) -> int:
    """Earliest time >= t at which the phase is active."""
    if t < phase.start_ns:
        return phase.start_ns
    period = phase.active_ns + phase.inactive_ns
    k, r = divmod(t - phase.start_ns, period)
    return t if r < phase.active_ns else phase.start_ns + (k + 1) * period


def decide_action(cfg: AnomalyConfig, t: int, last_action, rng) -> tuple[bool, object]:
    """Act iff the phase is active, clearance has passed, and a uniform draw is below p.

    Returns ``(act, last_action)`` where ``last_action`` is updated on a true
    result.  The random draw is consumed only when both gates pass.
    """
    if not is_active(cfg.phase, t):
        return False, last_action
    if last_action is not None and t - last_action < cfg.min_clearance_ns:
        return False, last_action
    if rng.random() < cfg.probability:
        return True, t
    return False, last_action


def phase_label(anomalies, t: int) -> str:
    """Label of the first configured anomaly whose phase is active at ``t``."""
    for a in anomalies:
        if a.phase.label and is_active(a.phase, t):
            return a.phase.label
    return ""


@dataclass(frozen=True)
class LedgerEntry:
    time_ns: int
    anomaly: str
    kind: str
    stream: str
    seq: int
    detail: str = ""


LEDGER_COLUMNS = ("time_ns", "anomaly", "kind", "stream", "seq", "detail")


def _hex(value) -> bytes:
    if isinstance(value, (bytes, bytearray)):
        return bytes(value)
    if isinstance(value, list):
        return bytes(value)
    return bytes.fromhex(str(value).replace(" ", ""))


class AnomalyHook:
    """Runtime state of one anomaly.

    ``emit(pkt, t)`` hands a copy onward; ``drop(pkt)`` reports a removed copy.
    """

    def __init__(self, cfg: AnomalyConfig, seed: int):
        self.cfg = cfg
        self.kind = cfg.kind
        self.rng = Substream(seed, "anomaly", cfg.id)
        self.last_action = None
        self.ledger: list[LedgerEntry] = []
        self._match = {}
        self._pending = set()   # streams owed a BENIGN RECOVERED marker
        self._held = {}         # reorder: stream -> [held packet, packets still to pass]
        self._last_seen = None  # inject: most recent matching packet
        self.amount = int(cfg.param("amount_ns", 0) or 0)
        self.period = int(cfg.param("period_ns", 0) or 0)
        self.offset = int(cfg.param("offset", 0) or 0)
        self.replacement = _hex(cfg.param("replacement", "")) if cfg.kind == "manipulate" else b""
        self.template = _hex(cfg.param("payload", "")) if cfg.kind == "inject" else b""
        self.displacement = max(1, int(cfg.param("displacement", 1) or 1))

    # -- helpers
    def targets(self, stream) -> bool:
        m = self._match.get(stream.idx)
        if m is None:
            m = self._match[stream.idx] = self.cfg.target.matches_header(stream.header)
        return m

    def _decide(self, t: int) -> bool:
        act, self.last_action = decide_action(self.cfg, t, self.last_action, self.rng)
        return act

    def _log(self, t, pkt, detail=""):
        self.ledger.append(LedgerEntry(t, self.cfg.id, self.kind, pkt.stream.id, pkt.seq, detail))

    def _pass(self, pkt, t, emit):
        """Forward a copy we did not act on, marking recovery if owed."""
        sid = pkt.stream.idx
        if sid in self._pending and pkt.label == L.BENIGN:
            self._pending.discard(sid)
            pkt = pkt.relabel(L.BENIGN_RECOVERED)
        emit(pkt, t)

    # -- per-packet processing
    def process(self, pkt, t: int, emit, drop):
        if not self.targets(pkt.stream):
            emit(pkt, t)
            return
        sid = pkt.stream.idx
        kind = self.kind
        if kind == "inject":
            self._last_seen = pkt
            self._pass(pkt, t, emit)
            return
        if kind == "reorder":
            held = self._held.get(sid)
            if held is not None:
                self._pass(pkt, t, emit)
                held[1] -= 1
                if held[1] == 0:
                    del self._held[sid]
                    emit(held[0], t)
                    self._pending.add(sid)
                return
        if not self._decide(t):
            self._pass(pkt, t, emit)
            return
        if kind == "delay":
            self._log(t, pkt, f"+{self.amount}ns")
            self._pending.add(sid)
            emit(pkt.relabel(L.DELAYED), t + self.amount)
        elif kind == "eliminate":
            self._log(t, pkt)
            self._pending.add(sid)
            drop(pkt)
        elif kind == "manipulate":
            self._log(t, pkt, f"offset {self.offset}")
            self._pending.add(sid)
            out = pkt.relabel(L.MANIPULATED)
            out.patch = (self.offset, self.replacement)
            emit(out, t)
        elif kind == "reorder":
            self._log(t, pkt, "held")
            self._held[sid] = [pkt.relabel(L.REORDERED), self.displacement]

    def next_injection(self, t: int):
        """Next grid instant >= t inside an active phase, or None for non-injectors."""
        if self.kind != "inject" or self.period <= 0:
            return None
        ph = self.cfg.phase
        t = next_active(ph, t)
        k = -(-(t - ph.start_ns) // self.period)
        return ph.start_ns + k * self.period

    def inject(self, t: int, emit):
        """Grid tick: maybe insert a copy of the last matching header with the template payload."""
        tmpl = self._last_seen
        if tmpl is None or not self._decide(t):
            return
        pkt = tmpl.copy()
        pkt.label = L.INJECTED
        pkt.created = t
        pkt.payload = self.template
        pkt.patch = None
        pkt.injected = True
        self._log(t, pkt)
        self._pending.add(pkt.stream.idx)
        emit(pkt, t)

    def flush(self):
        """Packets still held at the end of the run."""
        held = [h[0] for h in self._held.values()]
        self._held.clear()
        return held
