"""Per-port gate control lists and CBS idle slopes derived from the routes."""
from __future__ import annotations

import math

from ..config import ScenarioConfig
from .routing import Network, StreamRoute
from .shapers import GateSchedule, UnschedulableError

WIRE_OVERHEAD = 20  # preamble + SFD + inter-frame gap, bytes


def tx_ns(frame_size: int, rate_bps: int) -> int:
    return math.ceil((frame_size + WIRE_OVERHEAD) * 8 * 1_000_000_000 / rate_bps)


def wire_rate(frame_size: int, mean_cycle_ns: float) -> float:
    """Average line rate (bit/s) of a stream including per-frame overhead."""
    return (frame_size + WIRE_OVERHEAD) * 8 * 1e9 / mean_cycle_ns


def timed_windows(cfg: ScenarioConfig, net: Network, routes: dict) -> dict:
    """port key -> sorted, merged open windows of the timed PCP within one cycle.

    A timed frame reaches hop 1 at ``offset + tx + prop``; the window on each
    egress opens ``hop_offset`` after arrival and lasts ``window``; the next
    hop's arrival follows from the window opening.
    """
    tas = cfg.topology.tas
    raw = {}
    for sid, route in routes.items():
        spec = route.stream.spec
        if spec.shaping_class != "timed":
            continue
        if spec.pcp != tas.pcp:
            raise UnschedulableError(f"stream {sid!r}: timed streams must use pcp {tas.pcp}")
        talker = net.ports[route.talker_port]
        if tx_ns(spec.frame_size, talker.rate_bps) > tas.window_ns:
            raise UnschedulableError(f"stream {sid!r}: frame does not fit the {tas.window_ns} ns window")
        first = net.ports[talker.peer].node
        arrival = spec.start_offset_ns + tx_ns(spec.frame_size, talker.rate_bps) + talker.propagation_ns
        stack = [(first, 0, arrival)]
        while stack:
            node, branch, arr = stack.pop()
            opens = arr + tas.hop_offset_ns
            for pkey, br in route.fwd.get((node, branch), ()):
                p = net.ports[pkey]
                tx = tx_ns(spec.frame_size, p.rate_bps)
                if tx > tas.window_ns:
                    raise UnschedulableError(
                        f"stream {sid!r}: frame does not fit the {tas.window_ns} ns window at {pkey}")
                raw.setdefault(pkey, []).append(opens)
                nxt = net.ports[p.peer].node
                if net.is_switch(nxt):
                    stack.append((nxt, br, opens + tx + p.propagation_ns))
    return {k: _merge_windows(v, tas.window_ns, tas.cycle_ns) for k, v in raw.items()}


def _merge_windows(opens, width, cycle):
    ivs = []
    for o in opens:
        s = o % cycle
        e = s + width
        if e <= cycle:
            ivs.append((s, e))
        else:
            ivs.append((s, cycle))
            ivs.append((0, e - cycle))
    ivs.sort()
    out = []
    for s, e in ivs:
        if out and s <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], e))
        else:
            out.append((s, e))
    return out


def complement(windows, cycle):
    out = []
    pos = 0
    for s, e in windows:
        if s > pos:
            out.append((pos, s))
        pos = max(pos, e)
    if pos < cycle:
        out.append((pos, cycle))
    return out


def gate_schedules(cfg: ScenarioConfig, net: Network, routes: dict) -> dict:
    """port key -> GateSchedule for every port carrying timed traffic."""
    tas = cfg.topology.tas
    out = {}
    for pkey, wins in timed_windows(cfg, net, routes).items():
        rest = complement(wins, tas.cycle_ns)
        if not rest:
            raise UnschedulableError(f"port {pkey}: timed windows leave no time for other traffic")
        gates = {tas.pcp: wins}
        for pcp in range(8):
            if pcp != tas.pcp:
                gates[pcp] = rest
        out[pkey] = GateSchedule(tas.cycle_ns, gates)
    # every frame must fit into some open interval of its class
    for sid, route in routes.items():
        spec = route.stream.spec
        for ports in route.fwd.values():
            for pkey, _ in ports:
                sched = out.get(pkey)
                if sched is None:
                    continue
                tx = tx_ns(spec.frame_size, net.ports[pkey].rate_bps)
                if tx > sched.longest_open(spec.pcp):
                    raise UnschedulableError(
                        f"stream {sid!r}: {tx} ns frame never fits the gate schedule at {pkey}")
    return out


def port_loads(net: Network, routes: dict, pcps=None) -> dict:
    """(port key, pcp) -> summed wire rate (bit/s) of streams egressing there."""
    loads = {}
    for route in routes.values():
        spec = route.stream.spec
        if pcps is not None and spec.pcp not in pcps:
            continue
        rate = wire_rate(spec.frame_size, spec.cycle.mean)
        ports = {pkey for entries in route.fwd.values() for pkey, _ in entries}
        for pkey in ports:
            loads[(pkey, spec.pcp)] = loads.get((pkey, spec.pcp), 0.0) + rate
    return loads


def cbs_slopes(cfg: ScenarioConfig, net: Network, routes: dict) -> dict:
    """(port key, pcp) -> idle slope (bit/s) for shaped classes on switch egress ports.

    Talkers send unshaped; shaping starts at the first switch.
    """
    shaped = {pcp for pcp, cls in cfg.topology.traffic_classes if cls == "shaped"}
    factor = cfg.topology.cbs.idle_slope_factor
    out = {}
    for (pkey, pcp), load in port_loads(net, routes, shaped).items():
        if not net.is_switch(net.ports[pkey].node):
            continue
        out[(pkey, pcp)] = min(factor * load, float(net.ports[pkey].rate_bps))
    return out
