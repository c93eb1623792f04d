import pytest

from nadskit.config import from_dict
from nadskit.dataset.pcapng import encode_point
from nadskit.nads.filters import parse_header
from nadskit.sim.engine import SimulationError, run_simulation
from nadskit.sim.frames import check_fcs, frame_sequence
from nadskit.sim.routing import build_routes
from nadskit.sim.schedule import gate_schedules, tx_ns
from nadskit.sim.shapers import UnschedulableError

from conftest import MS, line_doc, line_scenario


@pytest.fixture(scope="module")
def line_run():
    return run_simulation(line_scenario())


def test_empty_stream_list_gives_empty_capture():
    res = run_simulation(line_scenario(streams=[]))
    assert len(res.capture) == 0
    assert res.stats.listeners == []
    assert all(p.frames == 0 for p in res.stats.ports)
    assert set(res.capture.points) == {"swB-eth0-in", "swA-eth1-out"}


def test_determinism_bytes_and_stats():
    a = run_simulation(line_scenario())
    b = run_simulation(line_scenario())
    assert a.stats.to_tsv() == b.stats.to_tsv()
    for name in a.capture.points:
        assert encode_point(a.capture.points[name]) == encode_point(b.capture.points[name])


def test_seed_changes_random_traffic():
    a = run_simulation(line_scenario())
    b = run_simulation(line_scenario(seed=8))
    assert a.stats.stream("video").sent != b.stats.stream("video").sent or \
        encode_point(a.capture.points["swB-eth0-in"]) != encode_point(b.capture.points["swB-eth0-in"])


def test_line_delivers_everything(line_run):
    st = line_run.stats
    for ls in st.listeners:
        assert ls.received == st.stream(ls.stream).sent
    assert st.conservation_violations() == []
    assert st.total_drops == 0


def test_jitter_is_max_minus_min(line_run):
    for ls in line_run.stats.listeners:
        assert ls.jitter == ls.latency_max - ls.latency_min
    assert "jitter_ns" in line_run.stats.to_tsv().splitlines()[3]


def test_two_hop_timed_latency_band(line_run):
    ls = line_run.stats.listener("ctrl", "listener")
    assert 61_000 <= ls.latency_min <= ls.latency_max <= 69_000


def test_timed_frames_transmit_inside_open_gates():
    cfg = line_scenario()
    res = run_simulation(cfg)
    from nadskit.sim.routing import Network
    net = Network.from_config(cfg)
    sched = gate_schedules(cfg, net, build_routes(cfg, net))["swA.eth1"]
    tas = cfg.topology.tas
    tx = tx_ns(110, 1_000_000_000)
    out = res.capture.points["swA-eth1-out"].packets
    starts = [p.ts for p in out if parse_header(p.frame).pcp == 6]
    assert starts
    for t in starts:
        phase = t % tas.cycle_ns
        assert any(s <= phase and phase + tx <= e for s, e in sched.gates[6])


def test_capture_invariants(line_run):
    line_run.capture.check()
    for point in line_run.capture.points.values():
        seqs = {}
        for p in point.packets:
            assert check_fcs(p.frame)
            h = parse_header(p.frame)
            seq = frame_sequence(p.frame)
            assert seqs.get(h.udp_dst, -1) < seq  # strictly increasing per stream
            seqs[h.udp_dst] = seq


def test_queue_overflow_is_counted_not_fatal():
    doc = line_doc(duration_ns=2 * MS)
    doc["topology"]["switch"] = {"queue_limit": 4}
    doc["topology"]["links"][1]["rate_bps"] = 200_000_000  # bottleneck between the switches
    doc["streams"][1]["cycle_ns"] = [13_000, 13_000]
    doc["streams"][1]["shaping_class"] = "strict_priority"
    doc["topology"]["traffic_classes"] = {"6": "timed", "5": "strict_priority", "4": "strict_priority"}
    res = run_simulation(from_dict(doc))
    assert res.stats.total_drops > 0
    assert res.stats.stream("video").queue_dropped > 0
    assert res.stats.conservation_violations() == []


def test_unschedulable_window_names_stream():
    doc = line_doc()
    doc["topology"]["tas"] = {"window_ns": 500}
    cfg = from_dict(doc)
    with pytest.raises((SimulationError, UnschedulableError), match="ctrl"):
        run_simulation(cfg)


def test_baseline_conservation_and_frer(baseline_short):
    st = baseline_short.stats
    assert st.conservation_violations() == []
    assert st.total_drops == 0
    assert st.stream("auto_brake").frer_eliminated > 0
    for ls in st.listeners:
        # the redundant copy is eliminated, never delivered twice
        assert ls.received <= st.stream(ls.stream).sent
        assert abs(st.stream(ls.stream).sent - ls.received) <= 1


def test_baseline_captures_all_points(baseline_short):
    names = set(baseline_short.capture.points)
    assert names == {"switchFrontRight-eth1-in", "switchRearRight-eth0-in",
                     "switchFrontLeft-eth1-in", "switchFrontRight-eth0-in"}
    baseline_short.capture.check()
