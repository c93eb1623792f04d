from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nadskit.anomaly import decide_action, is_active, next_active, phase_active, phase_label
from nadskit.config import AnomalyConfig, Location, Phase, from_dict
from nadskit.dataset import labels as L
from nadskit.nads.filters import StreamFilter, parse_header
from nadskit.sim.engine import run_simulation
from nadskit.sim.frames import check_fcs, frame_sequence

from conftest import MS, line_doc

SEC = 1_000 * MS


class Draws:
    """Deterministic stand-in for a random sub-stream."""

    def __init__(self, values):
        self.values = list(values)
        self.used = 0

    def random(self):
        self.used += 1
        return self.values.pop(0)


def anomaly(probability=1.0, clearance=0, phase=Phase(0, SEC, SEC, "attack")):
    return AnomalyConfig("a", "eliminate", Location("swA", "eth1"), StreamFilter.parse("udp_dst=1200"),
                         phase, probability, clearance)


# -- phase scheduling

def test_phase_square_wave():
    ph = Phase(2 * SEC, SEC, SEC, "delay_attack")
    assert phase_active(ph, 0) is None
    assert phase_active(ph, 2 * SEC) == "delay_attack"
    assert phase_active(ph, 3 * SEC - 1) == "delay_attack"
    assert phase_active(ph, 3 * SEC) is None
    assert phase_active(ph, 4 * SEC) == "delay_attack"


def test_next_active():
    ph = Phase(2 * SEC, SEC, SEC, "x")
    assert next_active(ph, 0) == 2 * SEC
    assert next_active(ph, 2 * SEC + 5) == 2 * SEC + 5
    assert next_active(ph, 3 * SEC) == 4 * SEC


@given(start=st.integers(0, 10**9), active=st.integers(1, 10**9), inactive=st.integers(0, 10**9),
       t=st.integers(0, 10**10))
def test_next_active_is_earliest_active_instant(start, active, inactive, t):
    ph = Phase(start, active, inactive, "x")
    n = next_active(ph, t)
    assert n >= t and is_active(ph, n)
    if n > t:
        assert not is_active(ph, n - 1) or n - 1 < t


def test_phase_label_first_active_wins():
    a = anomaly(phase=Phase(0, SEC, SEC, "first"))
    b = anomaly(phase=Phase(0, 2 * SEC, 0, "second"))
    assert phase_label([a, b], 10) == "first"
    assert phase_label([a, b], SEC + 10) == "second"
    assert phase_label([], 10) == ""


# -- decide_action

def test_certain_action_always_fires():
    cfg = anomaly()
    for t in range(0, 10 * MS, MS):
        act, last = decide_action(cfg, t, None, Draws([0.999999]))
        assert act and last == t


def test_inactive_phase_consumes_no_draw():
    cfg = anomaly(phase=Phase(SEC, SEC, 0, "x"))
    rng = Draws([0.0])
    assert decide_action(cfg, 0, None, rng) == (False, None)
    assert rng.used == 0


def test_clearance_blocks_and_releases():
    cfg = anomaly(clearance=10 * MS)
    rng = Draws([0.0] * 3)
    assert decide_action(cfg, 9 * MS, 0, rng) == (False, 0)
    assert rng.used == 0
    assert decide_action(cfg, 10 * MS, 0, rng) == (True, 10 * MS)


def test_probability_gate():
    cfg = anomaly(probability=0.5)
    assert decide_action(cfg, 0, None, Draws([0.49])) == (True, 0)
    assert decide_action(cfg, 0, None, Draws([0.5])) == (False, None)
    assert decide_action(anomaly(probability=0.0), 0, None, Draws([0.0])) == (False, None)


def count_actions(draws, p=0.5, clearance=10, candidates=1000):
    """Brute-force replay of the clearance-gated Bernoulli process on a 1 ms grid."""
    last, n, i = None, 0, 0
    for t in range(candidates):
        if last is not None and t - last < clearance:
            continue
        u = draws[i]
        i += 1
        if u < p:
            last, n = t, n + 1
    return n


def expected_actions(p=0.5, clearance=10, candidates=1000):
    """Exact expectation by dynamic programming over the remaining candidates."""
    e = [Fraction(0)] * (candidates + clearance + 1)
    for r in range(1, candidates + 1):
        # r candidates left and the gate is open
        e[r] = p * (1 + e[max(r - clearance, 0)]) + (1 - p) * e[r - 1]
    return float(e[candidates])


def test_monte_carlo_action_count():
    cfg = anomaly(probability=0.5, clearance=10 * MS)
    gen = np.random.default_rng(2024)
    counts = []
    for _ in range(400):
        draws = gen.random(1000)
        rng = Draws(draws)
        last, n = None, 0
        for t in range(0, SEC, MS):
            act, last = decide_action(cfg, t, last, rng)
            n += act
        assert n == count_actions(draws)
        assert n <= 100
        counts.append(n)
    exact = expected_actions(p=Fraction(1, 2))
    assert exact == pytest.approx(1000 / 11, abs=0.5)
    se = np.std(counts) / np.sqrt(len(counts))
    assert abs(np.mean(counts) - exact) < 4 * se


# -- anomalies inside the simulator

def line_with(anomalies, streams=("ctrl", "can"), duration_ns=60 * MS, seed=7):
    doc = line_doc(duration_ns=duration_ns, seed=seed)
    doc["streams"] = [s for s in doc["streams"] if s["id"] in streams]
    doc["anomalies"] = anomalies
    return run_simulation(from_dict(doc))


def attack(kind, target, probability=1.0, clearance=0, params=None, phase=None, id_="atk"):
    doc = {"id": id_, "kind": kind, "location": {"node": "swA", "port": "eth1", "direction": "out"},
           "target": target, "probability": probability, "min_clearance_ns": clearance,
           "phase": phase or {"start_ns": 0, "active_ns": SEC, "inactive_ns": 0, "label": f"{kind}_attack"}}
    if params:
        doc["params"] = params
    return doc


def packets(res, udp, point="swB-eth0-in"):
    return [p for p in res.capture.points[point].packets if parse_header(p.frame).udp_dst == udp]


def test_delay_shifts_every_targeted_arrival():
    base = line_with([])
    res = line_with([attack("delay", "udp_dst=2000", params={"amount_ns": 7_000})])
    before, after = packets(base, 2000), packets(res, 2000)
    assert len(before) == len(after) > 0
    assert all(b.ts + 7_000 == a.ts for b, a in zip(before, after))
    assert {p.labels for p in after} == {L.LabelPair(L.DELAYED, "delay_attack")}
    assert [p.ts for p in packets(base, 1200)] == [p.ts for p in packets(res, 1200)]


def test_eliminate_removes_targeted_copies():
    res = line_with([attack("eliminate", "udp_dst=2000")])
    assert packets(res, 2000) == []
    st_ = res.stats.stream("can")
    assert st_.anomaly_eliminated == st_.sent > 0
    assert res.stats.conservation_violations() == []
    assert res.stats.anomaly_actions["atk"] == st_.sent


def test_manipulate_patches_bytes_and_keeps_fcs_valid():
    res = line_with([attack("manipulate", "udp_dst=2000", params={"offset": 50, "replacement": "c0ffee"})])
    pk = packets(res, 2000)
    assert pk
    for p in pk:
        assert p.frame[50:53] == bytes.fromhex("c0ffee")
        assert check_fcs(p.frame)
        assert p.labels.packet == L.MANIPULATED


def test_inject_adds_copies_with_identical_header():
    res = line_with([attack("inject", "udp_dst=2000", params={"period_ns": 5 * MS, "payload": "deadbeef"})])
    pk = packets(res, 2000)
    inj = [p for p in pk if p.labels.packet == L.INJECTED]
    benign = [p for p in pk if p.labels.packet != L.INJECTED]
    assert len(benign) == res.stats.stream("can").sent
    assert 0 < len(inj) <= 60 // 5
    assert {parse_header(p.frame) for p in inj} == {parse_header(benign[0].frame)}
    assert all(p.frame[46:50] == bytes.fromhex("deadbeef") for p in inj)
    assert res.stats.listener("can", "listener").injected == len(inj)


def test_reorder_swaps_with_next_packet():
    res = line_with([attack("reorder", "udp_dst=1200", probability=1.0, clearance=10 * MS,
                            params={"displacement": 1})])
    pk = packets(res, 1200)
    seqs = [frame_sequence(p.frame) for p in pk]
    assert sorted(seqs) == list(range(len(seqs)))
    swaps = [i for i in range(len(seqs) - 1) if seqs[i] > seqs[i + 1]]
    assert swaps and all(seqs[i] == seqs[i + 1] + 1 for i in swaps)
    for i in swaps:
        assert pk[i + 1].labels.packet == L.REORDERED
    assert len(swaps) == res.stats.anomaly_actions["atk"]


def test_clearance_and_phase_confinement_from_ledger():
    phase = {"start_ns": 10 * MS, "active_ns": 20 * MS, "inactive_ns": 10 * MS, "label": "burst"}
    res = line_with([attack("eliminate", "udp_dst=1200", probability=0.5, clearance=3 * MS, phase=phase)],
                    duration_ns=100 * MS)
    times = [e.time_ns for e in res.ledger]
    assert len(times) > 5
    assert all(b - a >= 3 * MS for a, b in zip(times, times[1:]))
    ph = Phase(10 * MS, 20 * MS, 10 * MS, "burst")
    assert all(is_active(ph, t) for t in times)
    for p in res.capture.points["swB-eth0-in"].packets:
        assert (p.labels.phase == "burst") == is_active(ph, p.ts)


def test_one_recovery_marker_per_action():
    res = line_with([attack("eliminate", "udp_dst=1200", probability=0.5, clearance=3 * MS)],
                    duration_ns=100 * MS)
    labels = Counter(p.labels.packet for p in packets(res, 1200))
    assert labels[L.BENIGN_RECOVERED] == len(res.ledger) > 0
    assert labels[L.BENIGN] + labels[L.BENIGN_RECOVERED] == len(packets(res, 1200))


def test_no_anomalies_means_no_markers():
    res = line_with([], streams=("ctrl", "video", "can"))
    assert res.ledger == []
    for point in res.capture.points.values():
        assert {p.labels for p in point.packets} == {L.LabelPair(L.BENIGN, "")}


def test_anomaly_decisions_are_deterministic():
    spec = [attack("eliminate", "udp_dst=1200", probability=0.5, clearance=2 * MS)]
    a = line_with(spec, duration_ns=40 * MS)
    b = line_with(spec, duration_ns=40 * MS)
    assert a.ledger == b.ledger
