import numpy as np
import pytest
from hypothesis import given, strategies as st

from nadskit.sim.clock import ClockModel, local_time, local_times
from nadskit.sim.frer import RecoveryState, frer_accept

MS = 1_000_000


def accept_all(seqs, history=64):
    state = RecoveryState(history)
    out = []
    for s in seqs:
        ok, state = frer_accept(state, s)
        out.append(ok)
    return out


def test_frer_duplicate_elimination():
    assert accept_all([1, 2, 2, 3]) == [True, True, False, True]


def test_frer_both_copies_one_delivery():
    assert accept_all([7, 7]).count(True) == 1


def test_frer_history_evicts_oldest():
    assert accept_all([1, 2, 3, 1], history=2) == [True, True, True, True]
    assert accept_all([1, 2, 3, 3], history=2) == [True, True, True, False]


@given(st.lists(st.integers(0, 200), max_size=300))
def test_frer_never_accepts_twice_within_history(seqs):
    accepted = [s for s, ok in zip(seqs, accept_all(seqs, history=1000)) if ok]
    assert len(accepted) == len(set(accepted))
    assert set(accepted) == set(seqs)


def test_perfect_clock():
    c = ClockModel(0.0, 125 * MS, 0)
    for t in (0, 1, 999_999_999, 10**12 + 7):
        assert local_time(c, t) == t


def test_linear_drift_after_sync():
    c = ClockModel(50.0, 125 * MS, 0)
    assert local_time(c, 125 * MS + 1 * MS) - (125 * MS + 1 * MS) == 50


def test_drift_sampled_within_bound_and_deterministic():
    a = ClockModel.for_node(3, "swA", 50.0, 125 * MS, 1_000)
    b = ClockModel.for_node(3, "swA", 50.0, 125 * MS, 1_000)
    assert a.drift_ppm == b.drift_ppm
    assert -50.0 <= a.drift_ppm <= 50.0
    assert ClockModel.for_node(3, "swB", 50.0, 125 * MS, 1_000).drift_ppm != a.drift_ppm


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_offset_bound_over_one_sync_period(seed):
    c = ClockModel.for_node(seed, "n", 50.0, 125 * MS, 1_000)
    bound = c.offset_bound_ns + abs(c.drift_ppm) * 1e-6 * c.sync_interval_ns
    t = np.arange(0, 2 * c.sync_interval_ns, 997, dtype=np.int64)
    err = np.abs(local_times(c, t) - t)
    assert err.max() <= bound + 1


@given(st.lists(st.integers(0, 10**11), min_size=1, max_size=200), st.integers(0, 2**32))
def test_vectorised_local_times_match_scalar(times, seed):
    c = ClockModel.for_node(seed, "x", 50.0, 125 * MS, 1_000)
    vec = local_times(c, np.array(times, dtype=np.int64))
    assert vec.tolist() == [local_time(c, t) for t in times]
