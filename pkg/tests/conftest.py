import copy
import json
from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from nadskit.config import SCENARIO_DIR, from_dict, load_scenario

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = Path(__file__).resolve().parent / "fixtures"
MS = 1_000_000


def shipped(name, duration_ns=None, seed=None):
    cfg = load_scenario(SCENARIO_DIR / f"{name}.json")
    changes = {}
    if duration_ns is not None:
        changes["duration_ns"] = duration_ns
    if seed is not None:
        changes["seed"] = seed
    return replace(cfg, **changes)


LINE_DOC = {
    "name": "line",
    "duration_ns": 20 * MS,
    "seed": 7,
    "topology": {
        "nodes": [{"name": "talker", "kind": "endpoint"}, {"name": "swA", "kind": "switch"},
                  {"name": "swB", "kind": "switch"}, {"name": "listener", "kind": "endpoint"}],
        "links": [{"a": "talker.eth0", "b": "swA.eth2", "rate_bps": 1_000_000_000, "propagation_ns": 50},
                  {"a": "swA.eth1", "b": "swB.eth0", "rate_bps": 1_000_000_000, "propagation_ns": 50},
                  {"a": "swB.eth2", "b": "listener.eth0", "rate_bps": 1_000_000_000, "propagation_ns": 50}],
        "traffic_classes": {"6": "timed", "5": "shaped", "4": "strict_priority"},
        "clock": {"drift_ppm": 0, "sync_interval_ns": 125_000_000, "offset_bound_ns": 0},
    },
    "streams": [
        {"id": "ctrl", "pcp": 6, "source": "talker", "destinations": ["listener"], "frame_size": 110,
         "cycle_ns": MS, "shaping_class": "timed", "transport": "udp", "udp_dst": 1200},
        {"id": "video", "pcp": 5, "source": "talker", "destinations": ["listener"], "frame_size": 1426,
         "cycle_ns": [30_000, 100_000], "shaping_class": "shaped", "transport": "udp", "udp_dst": 6000},
        {"id": "can", "pcp": 4, "source": "talker", "destinations": ["listener"], "frame_size": 64,
         "cycle_ns": 10 * MS, "transport": "udp", "udp_dst": 2000},
    ],
    "capture_points": [{"node": "swB", "port": "eth0", "direction": "in"},
                       {"node": "swA", "port": "eth1", "direction": "out"}],
}


def line_doc(**changes):
    doc = copy.deepcopy(LINE_DOC)
    doc.update(copy.deepcopy(changes))
    return doc


def line_scenario(**changes):
    return from_dict(line_doc(**changes))


@pytest.fixture(scope="session")
def baseline_short():
    from nadskit.sim.engine import run_simulation
    return run_simulation(shipped("baseline", duration_ns=250 * MS))


@pytest.fixture(scope="session")
def fig2_path():
    return FIXTURES / "fig2_excerpt.pcapng"


def dump(doc) -> str:
    return json.dumps(doc)


# -- acceptance criteria ledger, printed after the test run

ACCEPTANCE: dict = {}


class Criterion:
    """Context manager recording PASS/FAIL and a detail line for one acceptance criterion."""

    def __init__(self, key: str, title: str):
        self.key, self.title, self.detail = key, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        if exc_type is not None and not self.detail:
            self.detail = f"{exc_type.__name__}: {exc}".splitlines()[0]
        ACCEPTANCE[self.key] = (status, self.title, self.detail)
        return False


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        status, title, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:<4} {status}  {title}: {detail}")
