"""Multi-seed case study: the three attack scenarios against the baseline.

Each (scenario, seed) simulation is reduced to a small JSON summary (listener
statistics plus the metric windows of the case-study streams) and cached on
disk under a fingerprint of the simulator sources, so detector experiments
can be rerun without resimulating.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .config import SCENARIO_DIR, load_scenario
from .nads.filters import StreamFilter
from .nads.metrics import MetricWindow
from .nads.pipeline import stream_windows

PKG = Path(__file__).resolve().parent
SEEDS = tuple(range(1, 11))


@dataclass(frozen=True)
class Case:
    scenario: str
    filter: str
    detector: str


CASES = (
    Case("elimination", "udp_dst=1301,iface=switchFrontRight-eth1-in", "mean_shift"),
    Case("reorder", "udp_dst=6000,iface=switchRearRight-eth0-in", "isolation_forest"),
    Case("injection", "udp_dst=2103,iface=switchFrontLeft-eth1-in", "hbos"),
)
# autoencoder false-alarm check: trained on one baseline seed, scored on the next
HOLDOUT = Case("baseline", "udp_dst=1301,iface=switchFrontRight-eth1-in", "autoencoder")

_SIM_SOURCES = ("sim/*.py", "anomaly.py", "config.py", "rng.py", "scenarios/*",
                "dataset/capture.py", "dataset/labels.py", "nads/filters.py", "nads/metrics.py")


def fingerprint() -> str:
    """Hash of every source file that influences a cached summary."""
    h = hashlib.sha256()
    for pattern in _SIM_SOURCES:
        for p in sorted(PKG.glob(pattern)):
            h.update(p.relative_to(PKG).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()[:16]


def filters_for(scenario: str) -> list[str]:
    if scenario == "baseline":
        return sorted({c.filter for c in CASES} | {HOLDOUT.filter})
    return [c.filter for c in CASES if c.scenario == scenario]


def _window_row(w: MetricWindow) -> list:
    return [w.start, w.nominal_length, w.real_length, w.bandwidth, w.avg_frame_size, w.avg_frame_gap,
            w.avg_cycle_jitter, w.packet_count, w.ground_truth, w.closed, w.first_index]


def windows_from_rows(rows) -> list[MetricWindow]:
    return [MetricWindow(*r) for r in rows]


def summarize(result, cfg, wall: float) -> dict:
    st = result.stats
    listeners = [[ls.stream, ls.listener, ls.received, ls.injected, ls.duplicates,
                  None if not ls.received else int(ls.latency_min),
                  None if not ls.received else int(ls.latency_max)] for ls in st.listeners]
    copies = {c.stream: {"sent": c.sent, "created": c.created, "delivered": c.delivered,
                         "frer_eliminated": c.frer_eliminated, "anomaly_eliminated": c.anomaly_eliminated,
                         "queue_dropped": c.queue_dropped, "in_flight": c.in_flight}
              for c in st.copies}
    windows = {f: [_window_row(w) for w in stream_windows(result.capture, StreamFilter.parse(f))]
               for f in filters_for(cfg.name)}
    return {"scenario": cfg.name, "seed": cfg.seed, "duration_ns": cfg.duration_ns,
            "wall_seconds": wall, "listeners": listeners, "copies": copies,
            "total_drops": st.total_drops, "violations": st.conservation_violations(),
            "anomaly_actions": st.anomaly_actions, "windows": windows}


def run_case(scenario: str, seed: int, duration_ns: Optional[int] = None,
             cache_dir: Optional[Path] = None) -> dict:
    """Summary of one simulation, loaded from the cache when available."""
    from .sim.engine import run_simulation

    cfg = load_scenario(SCENARIO_DIR / f"{scenario}.json")
    cfg = replace(cfg, seed=seed, duration_ns=duration_ns or cfg.duration_ns)
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / fingerprint() / f"{scenario}-s{seed}-{cfg.duration_ns}.json"
        if path.is_file():
            return json.loads(path.read_text())
    t0 = time.perf_counter()
    result = run_simulation(cfg)
    summary = summarize(result, cfg, time.perf_counter() - t0)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".part")
        tmp.write_text(json.dumps(summary))
        tmp.replace(path)
    return summary


def case_scores(case: Case, train: dict, test: dict, seed: int) -> "object":
    """EvalReport of one case for one seed pair of summaries."""
    import warnings

    from .nads.pipeline import run_pipeline

    f = StreamFilter.parse(case.filter)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_pipeline(windows_from_rows(train["windows"][case.filter]),
                            windows_from_rows(test["windows"][case.filter]), f, case.detector, seed=seed)
