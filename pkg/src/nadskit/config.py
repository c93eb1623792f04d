"""Scenario documents: parsing, inheritance, wildcard expansion, validation.

A scenario is a JSON document with the top-level keys ``name, base,
duration_ns, seed, topology, streams, anomalies, capture_points``.  The full
schema is documented in ``docs/scenario_schema.md``.  All times are integer
nanoseconds.
"""
from __future__ import annotations

import copy
import csv
import fnmatch
import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Optional

from .nads.filters import StreamFilter

SHAPING_CLASSES = ("timed", "shaped", "strict_priority")
NODE_KINDS = ("endpoint", "switch")
DIRECTIONS = ("in", "out", "both")
ANOMALY_KINDS = ("delay", "eliminate", "inject", "manipulate", "reorder")
TRANSPORTS = ("udp", "raw")
MIN_FRAME = 64
MAX_FRAME = 1522
# dst MAC + src MAC + 802.1Q tag + ethertype
L2_HEADER = 18
IP_UDP_HEADER = 28
FCS = 4


class ConfigError(ValueError):
    """Raised for documents that cannot be turned into a ScenarioConfig."""

    def __init__(self, message: str, path: str = "", position: Optional[tuple[int, int]] = None):
        self.path = path
        self.position = position
        where = f" at {path}" if path else ""
        if position:
            where += f" (line {position[0]}, column {position[1]})"
        super().__init__(message + where)


@dataclass(frozen=True)
class Node:
    name: str
    kind: str


@dataclass(frozen=True)
class Link:
    a: str
    b: str
    rate_bps: int
    propagation_ns: int = 0
    # only replicated (FRER) traffic may use this link; plain traffic routes around it
    redundant_only: bool = False


@dataclass(frozen=True)
class TasConfig:
    pcp: int = 6
    cycle_ns: int = 1_000_000
    window_ns: int = 10_000
    hop_offset_ns: int = 30_000


@dataclass(frozen=True)
class CbsConfig:
    idle_slope_factor: float = 1.1


@dataclass(frozen=True)
class SwitchConfig:
    processing_ns: int = 2_000
    queue_limit: int = 512


@dataclass(frozen=True)
class ClockConfig:
    drift_ppm: float = 50.0
    sync_interval_ns: int = 125_000_000
    offset_bound_ns: int = 1_000


@dataclass(frozen=True)
class FrerConfig:
    history_length: int = 64


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    traffic_classes: tuple[tuple[int, str], ...] = ()
    tas: TasConfig = TasConfig()
    cbs: CbsConfig = CbsConfig()
    switch: SwitchConfig = SwitchConfig()
    clock: ClockConfig = ClockConfig()
    frer: FrerConfig = FrerConfig()

    def node(self, name: str) -> Optional[Node]:
        for n in self.nodes:
            if n.name == name:
                return n
        return None

    def class_of(self, pcp: int) -> str:
        return dict(self.traffic_classes).get(pcp, "strict_priority")


@dataclass(frozen=True)
class Cycle:
    """Inter-emission time of a stream: fixed, uniform [lo, hi] or exponential."""
    kind: str
    lo: int
    hi: int = 0
    mean: float = 0.0

    @classmethod
    def fixed(cls, period: int) -> "Cycle":
        return cls("fixed", period, period, float(period))

    @classmethod
    def uniform(cls, lo: int, hi: int) -> "Cycle":
        return cls("uniform", lo, hi, (lo + hi) / 2)

    @classmethod
    def exponential(cls, mean: float) -> "Cycle":
        return cls("exponential", 0, 0, float(mean))

    def to_json(self):
        if self.kind == "fixed":
            return self.lo
        if self.kind == "uniform":
            return [self.lo, self.hi]
        return {"exponential_mean": self.mean}


@dataclass(frozen=True)
class StreamSpec:
    id: str
    pcp: int
    source: str
    destinations: tuple[str, ...]
    frame_size: int
    cycle: Cycle
    start_offset_ns: int = 0
    shaping_class: str = "strict_priority"
    redundant: bool = False
    # where duplicates of a replicated stream are removed: at the listener or at its switch
    elimination: str = "listener"
    transport: str = "raw"
    udp_dst: Optional[int] = None
    payload_bytes: Optional[int] = None
    vlan: int = 1
    dmac: Optional[str] = None


@dataclass(frozen=True)
class Phase:
    start_ns: int
    active_ns: int
    inactive_ns: int
    label: str


@dataclass(frozen=True)
class Location:
    node: str
    port: str
    direction: str = "out"


@dataclass(frozen=True)
class AnomalyConfig:
    id: str
    kind: str
    location: Location
    target: StreamFilter
    phase: Phase
    probability: float = 1.0
    min_clearance_ns: int = 0
    params: tuple[tuple[str, Any], ...] = ()

    def param(self, key, default=None):
        return dict(self.params).get(key, default)


@dataclass(frozen=True)
class CapturePoint:
    node: str
    port: str
    direction: str = "in"

    @property
    def interface_name(self) -> str:
        return f"{self.node}-{self.port}-{self.direction}"


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    duration_ns: int
    seed: int
    topology: Topology
    streams: tuple[StreamSpec, ...] = ()
    anomalies: tuple[AnomalyConfig, ...] = ()
    capture_points: tuple[CapturePoint, ...] = ()
    base: Optional[str] = None


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    resolved_stream_count: int = 0

    @property
    def ok(self) -> bool:
        return not self.errors


# --------------------------------------------------------------------------
# raw document handling

_TOP_KEYS = {"name", "base", "duration_ns", "seed", "topology", "streams", "anomalies", "capture_points"}
_TOPOLOGY_KEYS = {"nodes", "links", "traffic_classes", "tas", "cbs", "switch", "clock", "frer"}
_STREAM_KEYS = {f.name for f in fields(StreamSpec)} - {"cycle", "destinations"} | {"cycle_ns", "destinations"}
_MATRIX_KEYS = {"matrix", "pcp", "shaping_class", "frame_size", "transport", "udp_dst_base",
                "redundant", "vlan", "start_offset_ns"}
_ANOMALY_KEYS = {"id", "kind", "location", "target", "phase", "probability", "min_clearance_ns", "params"}
_PHASE_KEYS = {"start_ns", "active_ns", "inactive_ns", "label"}
_POINT_KEYS = {"node", "port", "direction"}
_KIND_PARAMS = {
    "delay": ("amount_ns",),
    "eliminate": (),
    "inject": ("period_ns",),
    "manipulate": ("offset", "replacement"),
    "reorder": (),
}

Loader = Callable[[str], tuple[str, Optional[Path]]]


def _loads(text: str, origin: str = "<document>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error in {origin}: {exc.msg}", position=(exc.lineno, exc.colno)) from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{origin}: top level must be an object")
    return doc


def _check_keys(obj: dict, allowed: set, path: str, required=()):
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", path)
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", f"{path}.{key}" if path else key)
    for key in required:
        if key not in obj:
            raise ConfigError(f"missing required field {key!r}", f"{path}.{key}" if path else key)


def load_matrix(path: Path) -> list[dict]:
    """Read a communication matrix (stream_id, source, destinations, cycle_ns, payload_bytes)."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["stream_id", "source", "destinations", "cycle_ns", "payload_bytes"]
        if reader.fieldnames != expected:
            raise ConfigError(f"matrix {path.name} must have columns {expected}")
        for row in reader:
            rows.append({
                "id": row["stream_id"],
                "source": row["source"],
                "destinations": [d for d in row["destinations"].split(";") if d],
                "cycle_ns": int(row["cycle_ns"]),
                "payload_bytes": int(row["payload_bytes"]),
            })
    return rows


def _inline_matrices(doc: dict, base_dir: Optional[Path]) -> dict:
    streams = doc.get("streams")
    if not isinstance(streams, list):
        return doc
    out = []
    for i, entry in enumerate(streams):
        if isinstance(entry, dict) and "matrix" in entry:
            path = f"streams[{i}]"
            _check_keys(entry, _MATRIX_KEYS, path, required=("matrix",))
            mpath = Path(entry["matrix"])
            if not mpath.is_absolute():
                if base_dir is None:
                    raise ConfigError("relative matrix path needs a document directory", path)
                mpath = base_dir / mpath
            if not mpath.exists():
                raise ConfigError(f"matrix file {mpath} not found", path)
            defaults = {k: v for k, v in entry.items() if k not in ("matrix", "udp_dst_base")}
            port_base = entry.get("udp_dst_base")
            for j, row in enumerate(load_matrix(mpath)):
                spec = dict(defaults)
                spec.update(row)
                if port_base is not None:
                    spec["udp_dst"] = port_base + j
                out.append(spec)
        else:
            out.append(entry)
    doc = dict(doc)
    doc["streams"] = out
    return doc


def _merge(parent: dict, child: dict) -> dict:
    out = copy.deepcopy(parent)
    for key, value in child.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def resolve_document(doc: dict, loader: Optional[Loader], base_dir: Optional[Path] = None,
                     _chain: tuple = ()) -> dict:
    """Apply ``base`` inheritance; child keys override parent keys, lists replace."""
    doc = _inline_matrices(doc, base_dir)
    base = doc.get("base")
    if base is None:
        return doc
    if base in _chain or base == doc.get("name"):
        raise ConfigError(f"inheritance cycle through {base!r}", "base")
    if loader is None:
        raise ConfigError(f"cannot resolve base {base!r}: no loader", "base")
    try:
        text, parent_dir = loader(base)
    except (FileNotFoundError, KeyError):
        raise ConfigError(f"unresolvable base reference {base!r}", "base") from None
    parent = _loads(text, base)
    parent = resolve_document(parent, loader, parent_dir, _chain + (doc.get("name"),))
    merged = _merge(parent, doc)
    merged["base"] = base
    return merged


def directory_loader(directory: Path) -> Loader:
    """Resolve ``base`` names next to the document, falling back to the shipped scenarios."""
    directory = Path(directory)

    def load(name: str):
        for d in (directory, SCENARIO_DIR):
            path = d / f"{name}.json"
            if path.is_file():
                return path.read_text(), d
        raise FileNotFoundError(name)
    return load


# --------------------------------------------------------------------------
# dict -> dataclass

def _int(value, path) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"expected an integer, got {value!r}", path)
    return int(value)


def _cycle(value, path) -> Cycle:
    if isinstance(value, list):
        if len(value) != 2:
            raise ConfigError("cycle range must be [lo, hi]", path)
        return Cycle.uniform(_int(value[0], path), _int(value[1], path))
    if isinstance(value, dict):
        _check_keys(value, {"exponential_mean"}, path, required=("exponential_mean",))
        return Cycle.exponential(float(value["exponential_mean"]))
    return Cycle.fixed(_int(value, path))


def _stream(d: dict, path: str) -> StreamSpec:
    _check_keys(d, _STREAM_KEYS, path,
                required=("id", "pcp", "source", "destinations", "frame_size", "cycle_ns"))
    dests = d["destinations"]
    if isinstance(dests, str):
        dests = [dests]
    return StreamSpec(
        id=str(d["id"]),
        pcp=_int(d["pcp"], f"{path}.pcp"),
        source=str(d["source"]),
        destinations=tuple(str(x) for x in dests),
        frame_size=_int(d["frame_size"], f"{path}.frame_size"),
        cycle=_cycle(d["cycle_ns"], f"{path}.cycle_ns"),
        start_offset_ns=_int(d.get("start_offset_ns", 0), f"{path}.start_offset_ns"),
        shaping_class=d.get("shaping_class", "strict_priority"),
        redundant=bool(d.get("redundant", False)),
        elimination=d.get("elimination", "listener"),
        transport=d.get("transport", "raw"),
        udp_dst=None if d.get("udp_dst") is None else _int(d["udp_dst"], f"{path}.udp_dst"),
        payload_bytes=None if d.get("payload_bytes") is None else _int(d["payload_bytes"], f"{path}.payload_bytes"),
        vlan=_int(d.get("vlan", 1), f"{path}.vlan"),
        dmac=d.get("dmac"),
    )


def _sub(cls, d, path):
    if d is None:
        return cls()
    allowed = {f.name for f in fields(cls)}
    _check_keys(d, allowed, path)
    return cls(**d)


def _topology(d: dict) -> Topology:
    _check_keys(d, _TOPOLOGY_KEYS, "topology", required=("nodes", "links"))
    nodes = []
    for i, n in enumerate(d["nodes"]):
        _check_keys(n, {"name", "kind"}, f"topology.nodes[{i}]", required=("name", "kind"))
        nodes.append(Node(n["name"], n["kind"]))
    links = []
    for i, ln in enumerate(d["links"]):
        p = f"topology.links[{i}]"
        _check_keys(ln, {"a", "b", "rate_bps", "propagation_ns", "redundant_only"}, p,
                    required=("a", "b", "rate_bps"))
        links.append(Link(ln["a"], ln["b"], _int(ln["rate_bps"], p + ".rate_bps"),
                          _int(ln.get("propagation_ns", 0), p + ".propagation_ns"),
                          bool(ln.get("redundant_only", False))))
    classes = tuple(sorted((int(k), v) for k, v in d.get("traffic_classes", {}).items()))
    return Topology(
        nodes=tuple(nodes), links=tuple(links), traffic_classes=classes,
        tas=_sub(TasConfig, d.get("tas"), "topology.tas"),
        cbs=_sub(CbsConfig, d.get("cbs"), "topology.cbs"),
        switch=_sub(SwitchConfig, d.get("switch"), "topology.switch"),
        clock=_sub(ClockConfig, d.get("clock"), "topology.clock"),
        frer=_sub(FrerConfig, d.get("frer"), "topology.frer"),
    )


def _anomaly(d: dict, path: str) -> AnomalyConfig:
    _check_keys(d, _ANOMALY_KEYS, path, required=("id", "kind", "location", "target", "phase"))
    loc = d["location"]
    _check_keys(loc, _POINT_KEYS, path + ".location", required=("node", "port"))
    ph = d["phase"]
    _check_keys(ph, _PHASE_KEYS, path + ".phase", required=("active_ns", "inactive_ns"))
    target = d["target"]
    if isinstance(target, str):
        target = StreamFilter.parse(target)
    else:
        target = StreamFilter.from_dict(target)
    params = d.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object", path + ".params")
    return AnomalyConfig(
        id=str(d["id"]),
        kind=d["kind"],
        location=Location(loc["node"], loc["port"], loc.get("direction", "out")),
        target=target,
        phase=Phase(_int(ph.get("start_ns", 0), path + ".phase.start_ns"),
                    _int(ph["active_ns"], path + ".phase.active_ns"),
                    _int(ph["inactive_ns"], path + ".phase.inactive_ns"),
                    str(ph.get("label", ""))),
        probability=float(d.get("probability", 1.0)),
        min_clearance_ns=_int(d.get("min_clearance_ns", 0), path + ".min_clearance_ns"),
        params=tuple(sorted(params.items())),
    )


def from_dict(doc: dict) -> ScenarioConfig:
    _check_keys(doc, _TOP_KEYS, "", required=("name", "duration_ns", "seed", "topology"))
    return ScenarioConfig(
        name=str(doc["name"]),
        duration_ns=_int(doc["duration_ns"], "duration_ns"),
        seed=_int(doc["seed"], "seed"),
        topology=_topology(doc["topology"]),
        streams=tuple(_stream(s, f"streams[{i}]") for i, s in enumerate(doc.get("streams", []))),
        anomalies=tuple(_anomaly(a, f"anomalies[{i}]") for i, a in enumerate(doc.get("anomalies", []))),
        capture_points=tuple(
            CapturePoint(**_checked_point(c, f"capture_points[{i}]"))
            for i, c in enumerate(doc.get("capture_points", []))),
        base=doc.get("base"),
    )


def _checked_point(c, path):
    _check_keys(c, _POINT_KEYS, path, required=("node", "port"))
    return c


def parse_scenario(text: str, loader: Optional[Loader] = None, base_dir: Optional[Path] = None) -> ScenarioConfig:
    """Parse a scenario document, applying ``base`` inheritance through ``loader``.

    Without a loader, ``base`` names resolve to the shipped scenarios.
    """
    doc = _loads(text)
    doc = resolve_document(doc, loader or directory_loader(SCENARIO_DIR), base_dir)
    return from_dict(doc)


SCENARIO_DIR = Path(__file__).resolve().parent / "scenarios"


def shipped_scenarios() -> list[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.json"))


def load_scenario(path) -> ScenarioConfig:
    """Parse a scenario file; ``base`` names resolve to siblings in the same directory."""
    path = Path(path)
    return parse_scenario(path.read_text(), directory_loader(path.parent), path.parent)


# --------------------------------------------------------------------------
# dataclass -> dict

def to_dict(cfg: ScenarioConfig) -> dict:
    topo = cfg.topology
    doc = {
        "name": cfg.name,
        "duration_ns": cfg.duration_ns,
        "seed": cfg.seed,
        "topology": {
            "nodes": [{"name": n.name, "kind": n.kind} for n in topo.nodes],
            "links": [{"a": ln.a, "b": ln.b, "rate_bps": ln.rate_bps, "propagation_ns": ln.propagation_ns,
                       "redundant_only": ln.redundant_only} for ln in topo.links],
            "traffic_classes": {str(k): v for k, v in topo.traffic_classes},
            "tas": vars_of(topo.tas), "cbs": vars_of(topo.cbs), "switch": vars_of(topo.switch),
            "clock": vars_of(topo.clock), "frer": vars_of(topo.frer),
        },
        "streams": [_stream_dict(s) for s in cfg.streams],
        "anomalies": [_anomaly_dict(a) for a in cfg.anomalies],
        "capture_points": [{"node": c.node, "port": c.port, "direction": c.direction}
                           for c in cfg.capture_points],
    }
    if cfg.base is not None:
        doc["base"] = cfg.base
    return doc


def vars_of(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def _stream_dict(s: StreamSpec) -> dict:
    d = vars_of(s)
    d.pop("cycle")
    d["destinations"] = list(s.destinations)
    d["cycle_ns"] = s.cycle.to_json()
    return d


def _anomaly_dict(a: AnomalyConfig) -> dict:
    return {
        "id": a.id, "kind": a.kind,
        "location": vars_of(a.location),
        "target": a.target.to_dict(),
        "phase": vars_of(a.phase),
        "probability": a.probability,
        "min_clearance_ns": a.min_clearance_ns,
        "params": dict(a.params),
    }


def serialize(cfg: ScenarioConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2, sort_keys=True)


def config_hash(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(serialize(cfg).encode()).hexdigest()


# --------------------------------------------------------------------------
# wildcard expansion

def match_nodes(pattern: str, names) -> list[str]:
    if "*" in pattern:
        return [n for n in names if fnmatch.fnmatchcase(n, pattern)]
    return [n for n in names if n == pattern]


@dataclass(frozen=True)
class ResolvedStream:
    spec: StreamSpec
    id: str
    source: str
    destinations: tuple[str, ...]


def stream_node_names(topo: Topology) -> list[str]:
    """Nodes that stream patterns can match: endpoints only."""
    return [n.name for n in topo.nodes if n.kind == "endpoint"]


def expand_streams(cfg: ScenarioConfig) -> list[ResolvedStream]:
    """One resolved stream per matching source; destinations exclude the source."""
    names = stream_node_names(cfg.topology)
    out = []
    for spec in cfg.streams:
        sources = match_nodes(spec.source, names)
        for src in sources:
            dests = []
            for pat in spec.destinations:
                for d in match_nodes(pat, names):
                    if d != src and d not in dests:
                        dests.append(d)
            sid = spec.id if "*" not in spec.source else f"{src}.{spec.id}"
            out.append(ResolvedStream(spec, sid, src, tuple(dests)))
    return out


def cycle_summary(cfg: ScenarioConfig) -> dict:
    """Configured cycle bounds and the mean of per-stream mean cycles (ns)."""
    streams = expand_streams(cfg)
    periodic = [r.spec.cycle for r in streams if r.spec.cycle.kind != "exponential"]
    means = [r.spec.cycle.mean for r in streams]
    return {
        "min_ns": min(c.lo for c in periodic) if periodic else None,
        "max_ns": max(c.hi for c in periodic) if periodic else None,
        "mean_ns": sum(means) / len(means) if means else None,
        "count": len(streams),
    }


# --------------------------------------------------------------------------
# validation

def _port_names(topo: Topology):
    ports = {}
    for i, ln in enumerate(topo.links):
        for end in (ln.a, ln.b):
            ports.setdefault(end, []).append(i)
    return ports


def payload_capacity(spec: StreamSpec) -> int:
    overhead = L2_HEADER + FCS + (IP_UDP_HEADER if spec.transport == "udp" else 0)
    return spec.frame_size - overhead


def validate_scenario(cfg: ScenarioConfig) -> ValidationReport:
    """Check every domain invariant; collects all violations."""
    rep = ValidationReport()
    err = lambda p, m: rep.errors.append((p, m))
    warn = lambda p, m: rep.warnings.append((p, m))
    topo = cfg.topology

    if cfg.duration_ns <= 0:
        err("duration_ns", "duration must be > 0")
    if not 0 <= cfg.seed < 2**64:
        err("seed", "seed must be an unsigned 64-bit integer")

    names = [n.name for n in topo.nodes]
    seen = set()
    for i, n in enumerate(topo.nodes):
        if n.name in seen:
            err(f"topology.nodes[{i}]", f"duplicate node name {n.name!r}")
        seen.add(n.name)
        if n.kind not in NODE_KINDS:
            err(f"topology.nodes[{i}].kind", f"unknown node kind {n.kind!r}")
    for pcp, cls in topo.traffic_classes:
        if cls not in SHAPING_CLASSES:
            err(f"topology.traffic_classes.{pcp}", f"unknown shaping class {cls!r}")

    ports = _port_names(topo)
    for end, idx in ports.items():
        if len(idx) > 1:
            err(f"topology.links[{idx[1]}]", f"port {end} appears in more than one link")
    for i, ln in enumerate(topo.links):
        for end in (ln.a, ln.b):
            node, _, port = end.partition(".")
            if not port:
                err(f"topology.links[{i}]", f"port reference {end!r} must be node.port")
            elif node not in seen:
                err(f"topology.links[{i}]", f"link references unknown node {node!r}")
        if ln.rate_bps <= 0:
            err(f"topology.links[{i}].rate_bps", "link rate must be > 0")
        if ln.propagation_ns < 0:
            err(f"topology.links[{i}].propagation_ns", "propagation delay must be >= 0")

    resolved = 0
    ids = set()
    names = stream_node_names(topo)
    for i, s in enumerate(cfg.streams):
        p = f"streams[{i}]"
        sources = match_nodes(s.source, names)
        if not sources:
            err(p + ".source", f"stream {s.id!r}: source {s.source!r} matches no endpoint")
        for pat in s.destinations:
            if not match_nodes(pat, names):
                err(p + ".destinations", f"stream {s.id!r}: destination {pat!r} matches no endpoint")
        if not 0 <= s.pcp <= 7:
            err(p + ".pcp", f"stream {s.id!r}: pcp must be 0-7")
        if not MIN_FRAME <= s.frame_size <= MAX_FRAME:
            err(p + ".frame_size",
                f"stream {s.id!r}: frame size {s.frame_size} outside [{MIN_FRAME}, {MAX_FRAME}] "
                f"(Ethernet minimum is {MIN_FRAME} bytes)")
        c = s.cycle
        if c.kind == "exponential":
            if c.mean <= 0:
                err(p + ".cycle_ns", f"stream {s.id!r}: exponential mean must be > 0")
        elif c.lo <= 0 or c.lo > c.hi:
            err(p + ".cycle_ns", f"stream {s.id!r}: cycle must satisfy 0 < lo <= hi")
        if s.shaping_class not in SHAPING_CLASSES:
            err(p + ".shaping_class", f"stream {s.id!r}: unknown shaping class {s.shaping_class!r}")
        elif topo.class_of(s.pcp) != s.shaping_class:
            err(p + ".shaping_class",
                f"stream {s.id!r}: pcp {s.pcp} is mapped to {topo.class_of(s.pcp)!r}, not {s.shaping_class!r}")
        if s.transport not in TRANSPORTS:
            err(p + ".transport", f"stream {s.id!r}: unknown transport {s.transport!r}")
        if s.transport == "udp" and s.udp_dst is None:
            err(p + ".udp_dst", f"stream {s.id!r}: udp transport needs udp_dst")
        if s.elimination not in ("listener", "switch"):
            err(p + ".elimination", f"stream {s.id!r}: elimination must be 'listener' or 'switch'")
        if s.payload_bytes is not None and s.payload_bytes > payload_capacity(s):
            err(p + ".payload_bytes", f"stream {s.id!r}: payload does not fit in frame")
        if 64 <= s.frame_size and payload_capacity(s) < 8:
            err(p + ".frame_size", f"stream {s.id!r}: frame too small for the sequence field")
        if not 0 <= s.vlan < 4095:
            err(p + ".vlan", f"stream {s.id!r}: vlan id out of range")
        for src in sources:
            sid = s.id if "*" not in s.source else f"{src}.{s.id}"
            if sid in ids:
                err(p + ".id", f"duplicate stream id {sid!r}")
            ids.add(sid)
            resolved += 1
            dests = [d for pat in s.destinations for d in match_nodes(pat, names) if d != src]
            if not dests and s.destinations:
                warn(p + ".destinations", f"stream {sid!r} has no destination after excluding its source")

    for i, a in enumerate(cfg.anomalies):
        p = f"anomalies[{i}]"
        if a.kind not in ANOMALY_KINDS:
            err(p + ".kind", f"unknown anomaly kind {a.kind!r}")
        else:
            for key in _KIND_PARAMS[a.kind]:
                if a.param(key) is None:
                    err(p + ".params", f"anomaly {a.id!r} ({a.kind}) needs parameter {key!r}")
        if not 0.0 <= a.probability <= 1.0:
            err(p + ".probability", "probability must lie in [0, 1]")
        if a.min_clearance_ns < 0:
            err(p + ".min_clearance_ns", "min clearance must be >= 0")
        if a.phase.active_ns <= 0 or a.phase.inactive_ns < 0:
            err(p + ".phase", "phase needs active_ns > 0 and inactive_ns >= 0")
        if a.location.direction not in ("in", "out"):
            err(p + ".location.direction", "anomaly direction must be 'in' or 'out'")
        if f"{a.location.node}.{a.location.port}" not in ports:
            err(p + ".location", f"anomaly {a.id!r}: no port {a.location.node}.{a.location.port}")

    for i, c in enumerate(cfg.capture_points):
        p = f"capture_points[{i}]"
        if c.direction not in DIRECTIONS:
            err(p + ".direction", f"unknown direction {c.direction!r}")
        if f"{c.node}.{c.port}" not in ports:
            err(p, f"capture point references unknown port {c.node}.{c.port}")

    rep.resolved_stream_count = resolved
    if not rep.errors:
        _check_routes(cfg, rep)
    return rep


def _check_routes(cfg, rep):
    from .sim.routing import RoutingError, build_routes
    try:
        build_routes(cfg)
    except RoutingError as exc:
        rep.errors.append(("streams", str(exc)))


def with_overrides(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    return replace(cfg, **changes)
