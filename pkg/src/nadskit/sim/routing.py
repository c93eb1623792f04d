"""Static forwarding tables.

Plain streams follow a shortest-path tree from the talker's switch over links
not marked ``redundant_only``.  Replicated streams are split at the talker's
switch into one branch per inter-switch port; each branch is a shortest-path
tree from that neighbour with the first switch removed, so the branches are
disjoint apart from their ends.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from ..config import ScenarioConfig, ResolvedStream, expand_streams


class RoutingError(ValueError):
    pass


@dataclass(frozen=True)
class PortInfo:
    key: str          # "node.port"
    node: str
    port: str
    peer: str         # "node.port" at the other end
    rate_bps: int
    propagation_ns: int
    redundant_only: bool


@dataclass
class Network:
    kinds: dict                     # node -> kind
    ports: dict                     # "node.port" -> PortInfo
    node_ports: dict = field(default_factory=dict)  # node -> [PortInfo], sorted by port

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "Network":
        topo = cfg.topology
        kinds = {n.name: n.kind for n in topo.nodes}
        ports = {}
        for ln in topo.links:
            for here, there in ((ln.a, ln.b), (ln.b, ln.a)):
                node, _, port = here.partition(".")
                ports[here] = PortInfo(here, node, port, there, ln.rate_bps, ln.propagation_ns,
                                       ln.redundant_only)
        node_ports = {n: [] for n in kinds}
        for p in sorted(ports.values(), key=lambda p: _port_sort_key(p.port)):
            node_ports[p.node].append(p)
        return cls(kinds, ports, node_ports)

    def is_switch(self, node: str) -> bool:
        return self.kinds.get(node) == "switch"

    def endpoint_port(self, node: str) -> PortInfo:
        ps = self.node_ports.get(node, [])
        if len(ps) != 1:
            raise RoutingError(f"endpoint {node!r} must have exactly one port, has {len(ps)}")
        return ps[0]

    def attachment(self, endpoint: str) -> tuple[str, PortInfo]:
        """(switch, switch-side port) an endpoint hangs off."""
        p = self.endpoint_port(endpoint)
        peer = self.ports[p.peer]
        if not self.is_switch(peer.node):
            raise RoutingError(f"endpoint {endpoint!r} is not attached to a switch")
        return peer.node, peer

    def switch_neighbours(self, node: str, allow_redundant: bool):
        for p in self.node_ports[node]:
            peer = self.ports[p.peer]
            if self.is_switch(peer.node) and (allow_redundant or not p.redundant_only):
                yield p, peer.node


def _port_sort_key(name: str):
    digits = "".join(ch for ch in name if ch.isdigit())
    return (name.rstrip("0123456789"), int(digits) if digits else -1, name)


@dataclass
class StreamRoute:
    stream: ResolvedStream
    talker_port: str
    # (node, branch) -> ((egress port key, branch), ...)
    fwd: dict
    # (switch, branch) -> number of switches traversed including this one
    hops: dict
    listeners: tuple
    # switches that eliminate duplicates before local delivery
    elimination_switches: frozenset = frozenset()
    branches: int = 1

    @property
    def redundant(self) -> bool:
        return self.stream.spec.redundant

    def listener_elimination(self) -> bool:
        return self.redundant and self.stream.spec.elimination == "listener"

    def paths(self, net: Network) -> dict:
        """listener -> list of port-key paths, one per branch that reaches it."""
        out = {l: [] for l in self.listeners}

        def walk(node, branch, path):
            for port, br in self.fwd.get((node, branch), ()):
                peer = net.ports[net.ports[port].peer].node
                if peer in out:
                    out[peer].append(path + [port])
                else:
                    walk(peer, br, path + [port])

        walk(self.stream.source, 0, [])
        return out


def _bfs_tree(net: Network, root: str, removed: set, allow_redundant: bool):
    """parent[node] = (parent node, egress port at parent) for a BFS tree."""
    parent = {root: None}
    dq = deque([root])
    while dq:
        u = dq.popleft()
        for port, v in net.switch_neighbours(u, allow_redundant):
            if v in parent or v in removed:
                continue
            parent[v] = (u, port.key)
            dq.append(v)
    return parent


def _prune(parent: dict, targets) -> dict:
    """Egress ports per switch of the subtree spanning ``targets``."""
    out = {}
    for t in targets:
        v = t
        while parent[v] is not None:
            u, port = parent[v]
            lst = out.setdefault(u, [])
            if port in lst:
                break
            lst.append(port)
            v = u
    return out


def _depths(parent: dict, start_depth: int) -> dict:
    memo = {}

    def depth(v):
        if v not in memo:
            memo[v] = start_depth if parent[v] is None else depth(parent[v][0]) + 1
        return memo[v]

    return {v: depth(v) for v in parent}


def route_stream(net: Network, rs: ResolvedStream) -> StreamRoute:
    sid = rs.id
    if net.kinds.get(rs.source) != "endpoint":
        raise RoutingError(f"stream {sid!r}: source {rs.source!r} is not an endpoint")
    talker = net.endpoint_port(rs.source)
    first = net.ports[talker.peer].node
    if not net.is_switch(first):
        raise RoutingError(f"stream {sid!r}: talker {rs.source!r} is not attached to a switch")
    local = {}  # switch -> [listener ports]
    for d in rs.destinations:
        sw, port = net.attachment(d)
        local.setdefault(sw, []).append(port.key)
    fwd = {(rs.source, 0): ((talker.key, 0),)}
    hops = {}
    targets = [sw for sw in local if sw != first]
    spec = rs.spec

    if not spec.redundant:
        parent = _bfs_tree(net, first, set(), allow_redundant=False)
        missing = [sw for sw in targets if sw not in parent]
        if missing:
            raise RoutingError(f"stream {sid!r}: no path from {rs.source!r} to switch {missing[0]!r}")
        egress = _prune(parent, targets)
        depth = _depths(parent, 1)
        for sw in set(egress) | set(local):
            ports = [(p, 0) for p in egress.get(sw, [])] + [(p, 0) for p in local.get(sw, [])]
            fwd[(sw, 0)] = tuple(ports)
            hops[(sw, 0)] = depth[sw]
        return StreamRoute(rs, talker.key, fwd, hops, rs.destinations)

    head = [(p, 0) for p in local.get(first, [])]
    hops[(first, 0)] = 1
    reached = set()
    branch = 0
    for port, nb in net.switch_neighbours(first, allow_redundant=True):
        parent = _bfs_tree(net, nb, {first}, allow_redundant=True)
        hit = [sw for sw in targets if sw in parent]
        if not hit:
            continue
        branch += 1
        reached.update(hit)
        head.append((port.key, branch))
        egress = _prune(parent, hit)
        depth = _depths(parent, 2)
        for sw in set(egress) | set(hit):
            ports = [(p, branch) for p in egress.get(sw, [])]
            if sw in local:
                ports += [(p, branch) for p in local[sw]]
            fwd[(sw, branch)] = tuple(ports)
            hops[(sw, branch)] = depth[sw]
    missing = [sw for sw in targets if sw not in reached]
    if missing:
        raise RoutingError(f"stream {sid!r}: no path from {rs.source!r} to switch {missing[0]!r}")
    fwd[(first, 0)] = tuple(head)
    elim = frozenset(local) if spec.elimination == "switch" else frozenset()
    return StreamRoute(rs, talker.key, fwd, hops, rs.destinations, elim, branch or 1)


def build_routes(cfg: ScenarioConfig, net: Network | None = None) -> dict:
    """stream id -> StreamRoute for every resolved stream."""
    net = net or Network.from_config(cfg)
    routes = {}
    for rs in expand_streams(cfg):
        for d in rs.destinations:
            if net.kinds.get(d) != "endpoint":
                raise RoutingError(f"stream {rs.id!r}: destination {d!r} is not an endpoint")
        routes[rs.id] = route_stream(net, rs)
    return routes
