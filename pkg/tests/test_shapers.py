import math

import pytest
from hypothesis import given, strategies as st

from nadskit.sim.schedule import tx_ns
from nadskit.sim.shapers import (CreditState, GateSchedule, UnschedulableError, cbs_transmit_time,
                                 tas_gate_transmit_time)

US = 1_000
CYCLE = 1_000 * US


@pytest.fixture
def window_30_40():
    return GateSchedule(CYCLE, {6: [(30 * US, 40 * US)]})


def test_tas_waits_for_first_window(window_30_40):
    assert tas_gate_transmit_time(window_30_40, 6, 0, 1 * US) == 30 * US


def test_tas_inside_window_sends_now(window_30_40):
    assert tas_gate_transmit_time(window_30_40, 6, 32 * US, 1 * US) == 32 * US


def test_tas_guard_band_rolls_to_next_cycle(window_30_40):
    assert tas_gate_transmit_time(window_30_40, 6, 39_500, 1 * US) == 1030 * US


def test_tas_unschedulable_frame(window_30_40):
    with pytest.raises(UnschedulableError):
        tas_gate_transmit_time(window_30_40, 6, 0, 11 * US)


def test_ungated_pcp_always_open(window_30_40):
    assert tas_gate_transmit_time(window_30_40, 5, 12_345, 50 * US) == 12_345


def test_gate_schedule_rejects_bad_intervals():
    with pytest.raises(ValueError):
        GateSchedule(CYCLE, {6: [(0, CYCLE + 1)]})
    with pytest.raises(ValueError):
        GateSchedule(CYCLE, {6: [(0, 10), (5, 20)]})


def brute_force_gate(intervals, cycle, ready, tx):
    """Scan every candidate start: ready itself and each window opening in the next cycles."""
    candidates = [ready]
    base = ready - ready % cycle
    for k in range(-1, 4):
        candidates += [base + k * cycle + s for s, _ in intervals]
    best = math.inf
    for t in candidates:
        if t < ready:
            continue
        for k in range(-1, 4):
            for s, e in intervals:
                lo, hi = base + k * cycle + s, base + k * cycle + e
                if lo <= t and t + tx <= hi:
                    best = min(best, t)
    return best


@st.composite
def gate_cases(draw):
    cuts = sorted(draw(st.sets(st.integers(1, 999), min_size=2, max_size=8)))
    if len(cuts) % 2:
        cuts = cuts[:-1]
    intervals = [(cuts[i] * US, cuts[i + 1] * US) for i in range(0, len(cuts), 2)]
    longest = max(e - s for s, e in intervals)
    tx = draw(st.integers(1, longest))
    ready = draw(st.integers(0, 5 * CYCLE))
    return intervals, tx, ready


@given(gate_cases())
def test_tas_matches_brute_force(case):
    intervals, tx, ready = case
    sched = GateSchedule(CYCLE, {6: intervals})
    assert tas_gate_transmit_time(sched, 6, ready, tx) == brute_force_gate(intervals, CYCLE, ready, tx)


def test_cbs_non_negative_credit_sends_now():
    st_ = CreditState.for_link(100e6, 1e9, now=5)
    start, after = cbs_transmit_time(st_, 5, 1_000)
    assert start == 5
    assert after.credit == pytest.approx(-900.0)  # drained at the send slope for 1 us
    assert after.last_update == 1_005


def test_cbs_negative_credit_replenishes():
    st_ = CreditState(-100.0, 100e6, 100e6 - 1e9, last_update=0)
    start, _ = cbs_transmit_time(st_, 0, 1_000)
    assert start == 1 * US


def test_cbs_send_slope_invariant():
    st_ = CreditState.for_link(250e6, 1e9)
    assert st_.send_slope == st_.idle_slope - 1e9


def test_cbs_idle_caps_positive_credit():
    st_ = CreditState(500.0, 100e6, -900e6, last_update=0)
    st_.settle_idle(10 * US)
    assert st_.credit == 0.0


def test_cbs_does_not_mutate_input():
    st_ = CreditState(-100.0, 100e6, -900e6, last_update=0)
    cbs_transmit_time(st_, 0, 1_000)
    assert st_.credit == -100.0


def replay_saturated(idle, rate, sizes):
    """Back-to-back queue on one link: every frame is ready when the previous one ends."""
    state = CreditState.for_link(idle, rate)
    t = 0
    sent = []
    for size in sizes:
        tx = tx_ns(size, rate)
        start, state = cbs_transmit_time(state, t, tx)
        assert start >= t
        sent.append((start, start + tx, (size + 20) * 8))
        t = start + tx
    return sent


@given(idle_frac=st.floats(0.02, 0.9), sizes=st.lists(st.integers(64, 1522), min_size=50, max_size=400))
def test_cbs_conformance_sliding_window(idle_frac, sizes):
    rate = 1e9
    idle = idle_frac * rate
    sent = replay_saturated(idle, rate, sizes)
    w = 10 * 1_000_000
    max_bits = max(b for *_, b in sent)
    starts = [s for s, _, _ in sent]
    for i, s0 in enumerate(starts):
        bits = sum(b for s, _, b in sent[i:] if s < s0 + w)
        assert bits <= idle * w * 1e-9 + max_bits + 1e-6


def test_cbs_long_run_rate_matches_idle_slope():
    rate, idle = 1e9, 200e6
    sent = replay_saturated(idle, rate, [1426] * 2000)
    span = sent[-1][1] - sent[0][0]
    bits = sum(b for *_, b in sent)
    assert bits / (span * 1e-9) == pytest.approx(idle, rel=0.01)
