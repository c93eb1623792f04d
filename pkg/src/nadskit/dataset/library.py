"""Dataset library entries: captures, stats, anomaly ledger and a hashed manifest.

Layout::

    <library>/<entry>/
        <scenario>_<node>_<port>_<dir>.pcapng   one per capture point
        stats.tsv
        anomaly_ledger.tsv
        scenario.json                            resolved configuration
        manifest.json                            name, seed, hashes (deterministic)
        timing.json                              wall-clock duration (not hashed)

Entries are written into a temporary sibling directory and renamed into
place, so a failed run leaves nothing behind and existing entries are never
modified.
"""
from __future__ import annotations

import hashlib
import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .pcapng import write_capture

MANIFEST = "manifest.json"
TIMING = "timing.json"
FORMAT = "nadskit-manifest/1"


class LibraryError(RuntimeError):
    pass


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


@dataclass
class RunManifest:
    name: str
    kind: str                      # "simulation" or "evaluation"
    seed: int
    config_hash: str
    files: dict = field(default_factory=dict)   # file name -> sha256
    info: dict = field(default_factory=dict)    # kind-specific, deterministic
    duration_ns: int = 0           # simulated duration

    def to_json(self) -> str:
        return dump_json({"format": FORMAT, "name": self.name, "kind": self.kind, "seed": self.seed,
                          "config_hash": self.config_hash, "duration_ns": self.duration_ns,
                          "files": self.files, "info": self.info})

    @classmethod
    def load(cls, path) -> "RunManifest":
        d = json.loads(Path(path).read_text())
        if d.get("format") != FORMAT:
            raise LibraryError(f"{path}: not a {FORMAT} manifest")
        return cls(d["name"], d["kind"], d["seed"], d["config_hash"], d["files"], d.get("info", {}),
                   d.get("duration_ns", 0))


def verify_entry(directory) -> list[str]:
    """Integrity problems of one entry: missing or modified files."""
    directory = Path(directory)
    m = RunManifest.load(directory / MANIFEST)
    problems = []
    for name, digest in sorted(m.files.items()):
        p = directory / name
        if not p.is_file():
            problems.append(f"{p}: missing")
        elif sha256_file(p) != digest:
            problems.append(f"{p}: hash mismatch")
    return problems


def find_manifests(library) -> list[Path]:
    return sorted(Path(library).rglob(MANIFEST))


class EntryWriter:
    """Collects files in a staging directory, then publishes them atomically.

    Use as a context manager; on error the staging directory is removed.
    """

    def __init__(self, target):
        self.target = Path(target)
        if self.target.exists():
            raise LibraryError(f"{self.target} already exists; library entries are write-once")
        self.target.parent.mkdir(parents=True, exist_ok=True)
        self.stage = Path(tempfile.mkdtemp(prefix=f".{self.target.name}.", dir=self.target.parent))

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None or self.stage.exists():
            shutil.rmtree(self.stage, ignore_errors=True)
        return False

    def path(self, name: str) -> Path:
        return self.stage / name

    def write_text(self, name: str, text: str) -> Path:
        p = self.path(name)
        p.write_text(text, encoding="utf-8")
        return p

    def publish(self, manifest: RunManifest, timing: dict | None = None) -> Path:
        manifest.files = {p.name: sha256_file(p) for p in sorted(self.stage.iterdir())
                          if p.name not in (MANIFEST, TIMING)}
        self.write_text(MANIFEST, manifest.to_json())
        if timing is not None:
            self.write_text(TIMING, dump_json(timing))
        os.chmod(self.stage, 0o755)  # mkdtemp creates 0700
        try:
            os.rename(self.stage, self.target)
        except OSError as e:
            raise LibraryError(f"cannot publish {self.target}: {e}") from e
        return self.target


LEDGER_HEADER = ("true_time_ns", "anomaly_id", "kind", "stream_id", "seq", "action_detail")


def ledger_tsv(entries) -> str:
    from ..anomaly import LEDGER_COLUMNS
    lines = ["\t".join(LEDGER_HEADER)]
    for e in entries:
        lines.append("\t".join(str(getattr(e, c)) for c in LEDGER_COLUMNS))
    return "\n".join(lines) + "\n"


def write_simulation_entry(result, cfg, target, wall_seconds: float | None = None) -> Path:
    """Store a simulation run as a library entry at ``target``."""
    from ..config import config_hash, serialize

    with EntryWriter(target) as w:
        write_capture(result.capture, w.stage, cfg.name)
        w.write_text("stats.tsv", result.stats.to_tsv())
        w.write_text("anomaly_ledger.tsv", ledger_tsv(result.ledger))
        w.write_text("scenario.json", serialize(cfg))
        info = {"scenario": cfg.name, "capture_points": sorted(result.capture.points)}
        m = RunManifest(Path(target).name, "simulation", cfg.seed, config_hash(cfg), info=info,
                        duration_ns=cfg.duration_ns)
        timing = None if wall_seconds is None else {"wall_seconds": round(wall_seconds, 3)}
        return w.publish(m, timing)
