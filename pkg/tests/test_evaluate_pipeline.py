import random
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nadskit.dataset import labels as L
from nadskit.dataset.capture import CaptureSet, LabeledPacket
from nadskit.nads.evaluate import EvalReport, evaluate, fmt_ratio
from nadskit.nads.filters import StreamFilter
from nadskit.nads.metrics import ABNORMAL_WINDOW as A, BENIGN_WINDOW as B
from nadskit.nads.model import DegenerateFeatureWarning
from nadskit.nads.pipeline import TRACE_COLUMNS, EmptyTrainingSet, run_pipeline, stream_windows

MS = 1_000_000

# (tp, fp, fn, tn) -> rounded (precision, recall) as published for the three case studies
PUBLISHED = [((55, 6, 0, 47), (0.90, 1.00)),
             ((20, 8, 35, 45), (0.71, 0.36)),
             ((53, 4, 2, 49), (0.93, 0.96))]


def outcomes(tp, fp, fn, tn, seed=0):
    pairs = [(A, A)] * tp + [(A, B)] * fp + [(B, A)] * fn + [(B, B)] * tn
    random.Random(seed).shuffle(pairs)
    return [p for p, _ in pairs], [t for _, t in pairs]


@pytest.mark.parametrize("counts,expected", PUBLISHED)
def test_published_confusion_rows(counts, expected):
    tp, fp, fn, tn = counts
    rep = evaluate(*outcomes(tp, fp, fn, tn))
    assert (rep.tp, rep.fp, rep.fn, rep.tn) == (tp, fp, fn, tn)
    assert (round(rep.precision, 2), round(rep.recall, 2)) == expected


@given(st.lists(st.tuples(st.sampled_from([A, B]), st.sampled_from([A, B])), max_size=200))
def test_evaluate_matches_hand_count(pairs):
    preds = [p for p, _ in pairs]
    truth = [t for _, t in pairs]
    rep = evaluate(preds, truth)
    assert rep.total == len(pairs)
    assert rep.tp == sum(p == A and t == A for p, t in pairs)
    assert rep.fp == sum(p == A and t == B for p, t in pairs)
    assert rep.fn == sum(p == B and t == A for p, t in pairs)
    if rep.tp + rep.fp:
        assert rep.precision == rep.tp / (rep.tp + rep.fp)
    else:
        assert rep.precision is None
    if rep.tp + rep.fn:
        assert rep.recall == rep.tp / (rep.tp + rep.fn)
    else:
        assert rep.recall is None
    assert EvalReport.from_tsv(rep.to_tsv()) == rep


def test_undefined_ratios_render_empty():
    rep = evaluate([B, B], [B, B])
    assert rep.precision is None and rep.recall is None
    assert rep.to_tsv().splitlines()[1] == "0\t0\t2\t0\t\t"
    assert fmt_ratio(2 / 3) == "0.666667"


def test_length_mismatch():
    with pytest.raises(ValueError):
        evaluate([A], [])


# -- pipeline on synthetic captures

def periodic_capture(n_ms, attack_from=None, seed=0, iface="sw-eth0-in"):
    rng = np.random.default_rng(seed)
    cap = CaptureSet()
    point = cap.add_point(iface)
    frame = bytearray(110)
    frame[12:14] = b"\x81\x00"
    frame[14:16] = (6 << 13).to_bytes(2, "big")
    t = 0
    for i in range(n_ms):
        t = i * MS + int(rng.integers(0, 2_000))
        label = L.LabelPair()
        if attack_from is not None and t >= attack_from and i % 2 == 0 and (i // 300) % 2 == 1:
            t += 300_000
            label = L.LabelPair(L.DELAYED, "delay_attack")
        point.packets.append(LabeledPacket(t, bytes(frame), label))
    point.packets.sort(key=lambda p: p.ts)
    return cap


def test_pipeline_detects_delay_bursts():
    f = StreamFilter.parse("pcp=6")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFeatureWarning)
        res = run_pipeline(periodic_capture(3_000, seed=1), periodic_capture(3_000, attack_from=0, seed=2),
                           f, "mean_shift", seed=0)
    assert res.train_windows == len(stream_windows(periodic_capture(3_000, seed=1), f))
    assert res.report.total == len(res.windows)
    assert res.report.tn > 0 and res.report.tp > 0
    assert res.report.recall >= 0.9 and res.report.precision >= 0.9
    trace = res.trace_tsv().splitlines()
    assert trace[0].split("\t") == list(TRACE_COLUMNS)
    assert len(trace) == len(res.windows) + 1


def test_pipeline_is_deterministic():
    f = StreamFilter.parse("pcp=6")
    train, test = periodic_capture(2_000, seed=1), periodic_capture(2_000, attack_from=0, seed=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFeatureWarning)
        a = run_pipeline(train, test, f, "isolation_forest", seed=5)
        b = run_pipeline(train, test, f, "isolation_forest", seed=5)
    assert a.trace_tsv() == b.trace_tsv()
    assert a.report == b.report


def test_pipeline_empty_training_set():
    with pytest.raises(EmptyTrainingSet):
        run_pipeline(periodic_capture(500), periodic_capture(500), StreamFilter.parse("udp_dst=9"), "hbos")


def test_trailing_window_is_dropped():
    ws = stream_windows(periodic_capture(1_050), StreamFilter.parse("pcp=6"))
    assert all(w.closed for w in ws)
    assert len(ws) == 10
