"""Discrete-event simulation of the switched network.

Events live in one heap ordered by ``(time, node id, insertion counter)``.
Sources stop emitting at the configured duration and the network then
drains, so every frame sent is accounted for.  Switches are store-and-forward with a fixed processing delay, one FIFO per
PCP on every egress port and strict priority between PCPs; TAS gates and CBS
credit decide when a queue head becomes eligible.  Gates run on true time;
node clocks only affect capture timestamps.
"""
from __future__ import annotations

import heapq
import itertools
import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .. import anomaly as anomalies
from ..config import ScenarioConfig, ResolvedStream, validate_scenario
from ..dataset import labels as L
from ..dataset.capture import CaptureSet, CapturePointData, LabeledPacket
from ..nads.filters import parse_header
from ..rng import Substream
from .clock import ClockModel, local_times
from .frames import ETH_GPTP, FrameTemplate
from .frer import RecoveryState, frer_accept
from .packet import Packet
from .routing import Network, build_routes
from .schedule import cbs_slopes, gate_schedules, tx_ns
from .shapers import CreditState
from .stats import ListenerStats, PortStats, StatsReport, StreamCopies

log = logging.getLogger(__name__)

EMIT, ARRIVE, EGRESS, WAKE, INJECT, INGRESS, FORWARD = range(7)
_PACKET_EVENTS = (ARRIVE, EGRESS, INGRESS, FORWARD)


class SimulationError(RuntimeError):
    pass


class _Node:
    __slots__ = ("id", "name", "is_switch", "clock", "ports")

    def __init__(self, idx, name, is_switch, clock):
        self.id = idx
        self.name = name
        self.is_switch = is_switch
        self.clock = clock
        self.ports = []


class _Port:
    __slots__ = ("key", "node", "peer", "rate", "prop", "queues", "busy_until", "wake_at", "gate",
                 "cbs", "hooks_in", "hooks_out", "cap_in", "cap_out", "tx_cache", "stats", "limit",
                 "pcps", "fast")

    def __init__(self, key, node, rate, prop, limit):
        self.key = key
        self.node = node
        self.peer = None
        self.rate = rate
        self.prop = prop
        self.queues = [deque() for _ in range(8)]
        self.busy_until = 0
        self.wake_at = -1
        self.gate = None
        self.cbs = [None] * 8
        self.hooks_in = []
        self.hooks_out = []
        self.cap_in = None
        self.cap_out = None
        self.tx_cache = {}
        self.stats = PortStats(key)
        self.limit = limit
        self.pcps = (7, 6, 5, 4, 3, 2, 1, 0)
        self.fast = False

    def tx(self, size):
        t = self.tx_cache.get(size)
        if t is None:
            t = self.tx_cache[size] = tx_ns(size, self.rate)
        return t


class _Stream:
    __slots__ = ("idx", "id", "spec", "pcp", "size", "header", "template", "kind", "lo", "hi",
                 "mean", "rng", "next_seq", "fwd", "talker", "elim_switch", "listener_elim",
                 "recovery", "listen", "copies", "first_emit")

    def draw_cycle(self):
        if self.kind == "fixed":
            return self.lo
        if self.kind == "uniform":
            return self.rng.uniform_int(self.lo, self.hi)
        return max(1, int(round(self.rng.exponential(self.mean))))


@dataclass
class SimulationResult:
    capture: CaptureSet
    stats: StatsReport
    ledger: list = field(default_factory=list)


class _LazyPackets:
    """Capture records materialised into ``LabeledPacket`` on access, in local-time order."""

    def __init__(self, records, clock, phase_fn):
        self._pkts = [p for _, p in records]
        true_t = np.fromiter((t for t, _ in records), dtype=np.int64, count=len(records))
        local = local_times(clock, true_t)
        # stable sort keeps capture order for equal local timestamps
        order = np.argsort(local, kind="stable")
        self._ts = local[order].tolist()
        self._true = true_t[order].tolist()
        self._pkts = [self._pkts[i] for i in order.tolist()]
        self._phase = phase_fn

    def __len__(self):
        return len(self._pkts)

    def _make(self, i):
        p = self._pkts[i]
        s = p.stream
        frame = s.template.build(p.seq, p.payload, p.patch)
        return LabeledPacket(self._ts[i], frame, L.LabelPair(p.label, self._phase(self._true[i])))

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self._make(j) for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        return self._make(i)

    def __iter__(self):
        for i in range(len(self._pkts)):
            yield self._make(i)

    def select(self, pred):
        """Packets whose header satisfies ``pred``; skips building non-matching frames."""
        cache = {}
        out = []
        for i, p in enumerate(self._pkts):
            if p.patch is None:
                ok = cache.get(p.stream.idx)
                if ok is None:
                    ok = cache[p.stream.idx] = pred(p.stream.header)
                if ok:
                    out.append(self._make(i))
            else:
                pkt = self._make(i)
                if pred(parse_header(pkt.frame)):
                    out.append(pkt)
        return out

    def true_times(self):
        return list(self._true)

    def records(self):
        """(true time, packet) in capture order."""
        return list(zip(self._true, self._pkts))


def _capture_directions(points):
    out = []
    for cp in points:
        dirs = ("in", "out") if cp.direction == "both" else (cp.direction,)
        for d in dirs:
            out.append((cp.node, cp.port, d, f"{cp.node}-{cp.port}-{d}"))
    return out


class Simulator:
    def __init__(self, cfg: ScenarioConfig, check: bool = True):
        if check:
            rep = validate_scenario(cfg)
            if not rep.ok:
                raise SimulationError("invalid scenario: " + "; ".join(f"{p}: {m}" for p, m in rep.errors))
        self.cfg = cfg
        topo = cfg.topology
        self.net = net = Network.from_config(cfg)
        self.routes = build_routes(cfg, net)
        self.nodes = {}
        for i, n in enumerate(topo.nodes):
            ck = topo.clock
            clock = ClockModel.for_node(cfg.seed, n.name, ck.drift_ppm, ck.sync_interval_ns, ck.offset_bound_ns)
            self.nodes[n.name] = _Node(i, n.name, n.kind == "switch", clock)
        self.ports = {}
        limit = topo.switch.queue_limit
        for key, info in net.ports.items():
            node = self.nodes[info.node]
            port = _Port(key, node, info.rate_bps, info.propagation_ns, limit)
            node.ports.append(port)
            self.ports[key] = port
        for key, port in self.ports.items():
            port.peer = self.ports[net.ports[key].peer]
        for key, sched in gate_schedules(cfg, net, self.routes).items():
            self.ports[key].gate = sched
        for (key, pcp), slope in cbs_slopes(cfg, net, self.routes).items():
            port = self.ports[key]
            port.cbs[pcp] = CreditState.for_link(slope, port.rate)
        self._build_streams()
        self.hooks = []
        for a in cfg.anomalies:
            hook = anomalies.AnomalyHook(a, cfg.seed)
            port = self.ports[f"{a.location.node}.{a.location.port}"]
            (port.hooks_in if a.location.direction == "in" else port.hooks_out).append(hook)
            self.hooks.append((hook, port))
        self.captures = []
        for node, pname, d, iface in _capture_directions(cfg.capture_points):
            port = self.ports[f"{node}.{pname}"]
            rec = []
            if d == "in":
                port.cap_in = rec
            else:
                port.cap_out = rec
            self.captures.append((iface, port, rec))

    def _build_streams(self):
        self.streams = []
        node_index = {name: n.id for name, n in self.nodes.items()}
        frer_len = self.cfg.topology.frer.history_length
        for idx, (sid, route) in enumerate(self.routes.items()):
            rs: ResolvedStream = route.stream
            spec = rs.spec
            s = _Stream()
            s.idx, s.id, s.spec, s.pcp, s.size = idx, sid, spec, spec.pcp, spec.frame_size
            etype = ETH_GPTP if spec.pcp == 7 and spec.transport == "raw" else None
            s.template = FrameTemplate(spec, idx + 1, node_index[rs.source] + 1, etype)
            s.header = parse_header(s.template.build(0))
            c = spec.cycle
            s.kind, s.lo, s.hi, s.mean = c.kind, c.lo, c.hi, c.mean
            s.rng = Substream(self.cfg.seed, "stream", sid)
            s.next_seq = 0
            s.fwd = {}
            for (node, branch), entries in route.fwd.items():
                s.fwd[(self.nodes[node].id, branch)] = tuple((self.ports[k], b) for k, b in entries)
            s.talker = self.ports[route.talker_port]
            s.elim_switch = {self.nodes[n].id for n in route.elimination_switches}
            s.listener_elim = route.listener_elimination()
            s.recovery = {}
            s.listen = {self.nodes[d].id: ListenerStats(sid, d) for d in route.listeners}
            s.copies = StreamCopies(sid)
            s.first_emit = spec.start_offset_ns
            self.streams.append(s)
            for key in {k for entries in route.fwd.values() for k, _ in entries}:
                self.ports[key].stats.streams += 1

    def _recovery(self, s, node_id):
        st = s.recovery.get(node_id)
        if st is None:
            st = s.recovery[node_id] = RecoveryState(self.cfg.topology.frer.history_length)
        return st

    # ------------------------------------------------------------------
    def run(self) -> SimulationResult:
        cfg = self.cfg
        end = cfg.duration_ns
        proc = cfg.topology.switch.processing_ns
        heap = []
        push = heapq.heappush
        pop = heapq.heappop
        counter = itertools.count()

        def sched(t, node_id, kind, a, b=None, c=0):
            push(heap, (t, node_id, next(counter), kind, a, b, c))

        # plain switch ports: arrival and processing delay collapse into one event
        sizes = {s.size for s in self.streams}
        used = {}
        for s in self.streams:
            for entries in s.fwd.values():
                for out, _ in entries:
                    used.setdefault(out.key, set()).add(s.pcp)
        for port in self.ports.values():
            port.pcps = tuple(sorted(used.get(port.key, range(8)), reverse=True))
            port.fast = port.node.is_switch and not port.hooks_in
            for size in sizes:
                port.tx(size)

        for s in self.streams:
            if s.first_emit < end:
                sched(s.first_emit, s.talker.node.id, EMIT, s)
        for hook, port in self.hooks:
            t0 = hook.next_injection(0)
            if t0 is not None and t0 < end:
                sched(t0, port.node.id, INJECT, hook, port, hook.cfg.location.direction == "in")

        def try_tx(port, t):
            best = None
            queues = port.queues
            gate = port.gate
            txc = port.tx_cache
            for pcp in port.pcps:
                q = queues[pcp]
                if not q:
                    continue
                pkt = q[0]
                tx = txc[pkt.stream.size]
                e = t
                cbs = port.cbs[pcp]
                if cbs is not None:
                    e = cbs.eligible_at(e)
                if gate is not None:
                    e = gate.earliest(pcp, e, tx)
                if e == t:
                    q.popleft()
                    done = t + tx
                    port.busy_until = done
                    if cbs is not None:
                        cbs.commit(t, tx)
                    if port.cap_out is not None:
                        port.cap_out.append((t, pkt))
                    st = port.stats
                    st.frames += 1
                    st.bytes += pkt.stream.size
                    peer = port.peer
                    if peer.fast:
                        push(heap, (done + port.prop + proc, peer.node.id, next(counter), FORWARD, peer, pkt, 0))
                    else:
                        push(heap, (done + port.prop, peer.node.id, next(counter), ARRIVE, peer, pkt, 0))
                    for qq in queues:
                        if qq:
                            port.wake_at = done
                            push(heap, (done, port.node.id, next(counter), WAKE, port, None, 0))
                            break
                    return
                if best is None or e < best:
                    best = e
            if best is not None and port.wake_at != best:
                port.wake_at = best
                sched(best, port.node.id, WAKE, port)

        def enqueue(port, pkt, t):
            pcp = pkt.stream.pcp
            q = port.queues[pcp]
            if len(q) >= port.limit:
                port.stats.drops += 1
                pkt.stream.copies.queue_dropped += 1
                return
            if not q:
                cbs = port.cbs[pcp]
                if cbs is not None:
                    cbs.settle_idle(t)
            q.append(pkt)
            if len(q) > port.stats.max_queue:
                port.stats.max_queue = len(q)
            if t >= port.busy_until:
                try_tx(port, t)
            elif port.wake_at != port.busy_until:
                port.wake_at = port.busy_until
                sched(port.busy_until, port.node.id, WAKE, port)

        def anomaly_drop(pkt):
            pkt.stream.copies.anomaly_eliminated += 1

        def egress(port, pkt, t, stage):
            hooks = port.hooks_out
            if stage >= len(hooks):
                enqueue(port, pkt, t)
                return

            def emit(p, at):
                if at == t:
                    egress(port, p, at, stage + 1)
                else:
                    sched(at, port.node.id, EGRESS, port, p, stage + 1)

            hooks[stage].process(pkt, t, emit, anomaly_drop)

        def forward(node, pkt, t, now):
            """Switch forwarding; copies reach their egress ports at ``t`` (``now`` is the current event time)."""
            s = pkt.stream
            entries = s.fwd.get((node.id, pkt.branch))
            if not entries:
                raise SimulationError(f"{s.id}: no forwarding entry at {node.name} branch {pkt.branch}")
            elim = node.id in s.elim_switch
            single = len(entries) == 1
            if not single:
                s.copies.created += len(entries) - 1
            for out, br in entries:
                if elim and not out.peer.node.is_switch:
                    ok, _ = frer_accept(self._recovery(s, node.id), pkt.seq)
                    if not ok:
                        s.copies.frer_eliminated += 1
                        continue
                if single:
                    p = pkt
                else:
                    p = pkt.copy()
                p.branch = br
                if t == now:
                    egress(out, p, t, 0)
                else:
                    sched(t, node.id, EGRESS, out, p, 0)

        def ingress(port, pkt, t, stage):
            hooks = port.hooks_in
            if stage < len(hooks):
                def emit(p, at):
                    if at == t:
                        ingress(port, p, at, stage + 1)
                    else:
                        sched(at, port.node.id, INGRESS, port, p, stage + 1)

                hooks[stage].process(pkt, t, emit, anomaly_drop)
                return
            node = port.node
            if node.is_switch:
                forward(node, pkt, t + proc, t)
            else:
                deliver(node, pkt, t)

        def deliver(node, pkt, t):
            s = pkt.stream
            ls = s.listen.get(node.id)
            if ls is None:
                raise SimulationError(f"{s.id}: copy reached non-listener {node.name}")
            if s.listener_elim:
                ok, _ = frer_accept(self._recovery(s, node.id), pkt.seq)
                if not ok:
                    s.copies.frer_eliminated += 1
                    ls.duplicates += 1
                    return
            s.copies.delivered += 1
            ls.add(t - pkt.created, pkt.injected)

        t = 0
        while True:
            if not heap:
                # sources have stopped; release packets still held by reorder hooks
                released = False
                for hook, port in self.hooks:
                    inbound = hook.cfg.location.direction == "in"
                    stage = (port.hooks_in if inbound else port.hooks_out).index(hook) + 1
                    for p in hook.flush():
                        released = True
                        (ingress if inbound else egress)(port, p, t, stage)
                if not heap and not released:
                    break
                continue
            ev = pop(heap)
            t = ev[0]
            kind = ev[3]
            if kind == FORWARD:
                port = ev[4]
                pkt = ev[5]
                if port.cap_in is not None:
                    port.cap_in.append((t - proc, pkt))
                forward(port.node, pkt, t, t)
            elif kind == WAKE:
                port = ev[4]
                if port.wake_at == t:
                    port.wake_at = -1
                if t >= port.busy_until:
                    try_tx(port, t)
            elif kind == EMIT:
                s = ev[4]
                pkt = Packet(s, s.next_seq, t)
                s.next_seq += 1
                s.copies.sent += 1
                s.copies.created += 1
                egress(s.talker, pkt, t, 0)
                nxt = t + s.draw_cycle()
                if nxt < end:
                    sched(nxt, ev[1], EMIT, s)
            elif kind == ARRIVE:
                port = ev[4]
                pkt = ev[5]
                if port.cap_in is not None:
                    port.cap_in.append((t, pkt))
                ingress(port, pkt, t, 0)
            elif kind == EGRESS:
                egress(ev[4], ev[5], t, ev[6])
            elif kind == INJECT:
                hook, port = ev[4], ev[5]
                inbound = ev[6]
                stage = (port.hooks_in if inbound else port.hooks_out).index(hook) + 1

                def emit(p, at):
                    p.stream.copies.created += 1
                    p.stream.copies.injected += 1
                    (ingress if inbound else egress)(port, p, at, stage)

                hook.inject(t, emit)
                nxt = hook.next_injection(t + 1)
                if nxt is not None and nxt < end:
                    sched(nxt, port.node.id, INJECT, hook, port, inbound)
            elif kind == INGRESS:
                ingress(ev[4], ev[5], t, ev[6])

        return self._finish(heap)

    # ------------------------------------------------------------------
    def _finish(self, heap) -> SimulationResult:
        cfg = self.cfg
        for ev in heap:
            if ev[3] in _PACKET_EVENTS:
                ev[5].stream.copies.in_flight += 1
        for port in self.ports.values():
            for q in port.queues:
                for p in q:
                    p.stream.copies.in_flight += 1
        ledger = []
        for hook, _ in self.hooks:
            for p in hook.flush():
                p.stream.copies.in_flight += 1
            ledger.extend(hook.ledger)
        ledger.sort(key=lambda e: (e.time_ns, e.anomaly))

        phase_fn = lambda t, a=cfg.anomalies: anomalies.phase_label(a, t)
        capture = CaptureSet()
        for iface, port, rec in self.captures:
            node = port.node
            packets = _LazyPackets(rec, node.clock, phase_fn)
            capture.points[iface] = CapturePointData(iface, port.rate, packets)

        stats = StatsReport(
            scenario=cfg.name, seed=cfg.seed, duration_ns=cfg.duration_ns,
            listeners=[ls for s in self.streams for ls in s.listen.values()],
            copies=[s.copies for s in self.streams],
            ports=[p.stats for p in self.ports.values() if p.stats.frames or p.stats.drops],
            captures={iface: len(rec) for iface, _, rec in self.captures},
            anomaly_actions={h.cfg.id: len(h.ledger) for h, _ in self.hooks},
        )
        return SimulationResult(capture, stats, ledger)


def run_simulation(cfg: ScenarioConfig) -> SimulationResult:
    """Simulate ``cfg`` for its duration and return labelled captures and statistics."""
    return Simulator(cfg).run()
