import json
from collections import Counter
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from nadskit.config import (ConfigError, SCENARIO_DIR, config_hash, cycle_summary, expand_streams,
                            from_dict, load_scenario, parse_scenario, serialize, shipped_scenarios,
                            validate_scenario)

from conftest import FIXTURES, line_doc, shipped

MINIMAL = {
    "name": "minimal", "duration_ns": 1_000_000_000, "seed": 1,
    "topology": {"nodes": [{"name": "a", "kind": "endpoint"}, {"name": "b", "kind": "endpoint"}],
                 "links": [{"a": "a.eth0", "b": "b.eth0", "rate_bps": 1_000_000_000}]},
    "streams": [],
}


def test_minimal_document_parses_with_no_streams():
    cfg = parse_scenario(json.dumps(MINIMAL))
    assert cfg.streams == ()
    assert cfg.duration_ns == 1_000_000_000
    assert validate_scenario(cfg).ok


def test_baseline_resolves_216_streams():
    cfg = shipped("baseline")
    rep = validate_scenario(cfg)
    assert rep.errors == []
    assert rep.resolved_stream_count == 216
    assert len(expand_streams(cfg)) == 216


def test_baseline_row_counts():
    cfg = shipped("baseline")
    per_spec = Counter()
    for rs in expand_streams(cfg):
        per_spec[rs.spec.id.split("_")[0] if rs.spec.id.startswith("can_") else rs.spec.id] += 1
    can = Counter(rs.source for rs in expand_streams(cfg) if rs.spec.id.startswith("can_"))
    assert can == {"zCFrontLeft": 42, "zCFrontRight": 61, "zCRearLeft": 7, "zCRearRight": 78,
                   "infotainment": 14}
    timed = [rs for rs in expand_streams(cfg) if rs.spec.pcp == 6]
    assert len(timed) == 6
    lidar = [rs for rs in expand_streams(cfg) if rs.spec.id.startswith("lidar")]
    camera = [rs for rs in expand_streams(cfg) if rs.spec.id.startswith("camera")]
    assert (len(camera), len(lidar)) == (2, 4)
    assert sum(1 for rs in expand_streams(cfg) if rs.spec.pcp == 7) == 1
    assert sum(1 for rs in expand_streams(cfg) if rs.spec.pcp == 2) == 1


def test_cycle_summary_matches_published_aggregates():
    s = cycle_summary(shipped("baseline"))
    assert s["min_ns"] == 29_000
    assert s["max_ns"] == 2_000_000_000
    assert s["mean_ns"] == pytest.approx(286_598_000, rel=1e-6)


def test_child_overriding_anomalies_only_equals_baseline_elsewhere(tmp_path):
    base = shipped("baseline")
    child = load_scenario(SCENARIO_DIR / "elimination.json")
    assert child.anomalies and not base.anomalies
    assert child.topology == base.topology
    assert child.streams == base.streams
    assert child.duration_ns == base.duration_ns


def test_inheritance_lists_replace(tmp_path):
    (tmp_path / "parent.json").write_text(json.dumps(line_doc(name="parent")))
    child = {"name": "child", "base": "parent",
             "streams": [line_doc()["streams"][0]], "topology": {"tas": {"window_ns": 12_000}}}
    (tmp_path / "child.json").write_text(json.dumps(child))
    cfg = load_scenario(tmp_path / "child.json")
    assert [s.id for s in cfg.streams] == ["ctrl"]
    assert cfg.topology.tas.window_ns == 12_000
    assert cfg.topology.tas.hop_offset_ns == 30_000  # untouched nested key survives
    assert len(cfg.topology.nodes) == 4


def test_inheritance_is_idempotent():
    a = load_scenario(SCENARIO_DIR / "reorder.json")
    b = load_scenario(SCENARIO_DIR / "reorder.json")
    assert a == b and config_hash(a) == config_hash(b)


def test_inheritance_cycle_rejected(tmp_path):
    (tmp_path / "x.json").write_text(json.dumps({"name": "x", "base": "y"}))
    (tmp_path / "y.json").write_text(json.dumps({"name": "y", "base": "x"}))
    with pytest.raises(ConfigError, match="cycle"):
        load_scenario(tmp_path / "x.json")


def test_unresolvable_base(tmp_path):
    (tmp_path / "x.json").write_text(json.dumps({"name": "x", "base": "nowhere"}))
    with pytest.raises(ConfigError, match="nowhere"):
        load_scenario(tmp_path / "x.json")


def test_base_falls_back_to_shipped_scenarios():
    cfg = load_scenario(FIXTURES / "short_elimination.json")
    assert cfg.duration_ns == 1_500_000_000
    assert cfg.anomalies[0].kind == "eliminate"


def test_syntax_error_reports_position():
    with pytest.raises(ConfigError) as ei:
        parse_scenario('{"name": "x",\n  "seed": }')
    assert ei.value.position[0] == 2


def test_unknown_key_rejected():
    doc = dict(MINIMAL, colour="blue")
    with pytest.raises(ConfigError, match="unknown key"):
        from_dict(doc)


def test_missing_required_field():
    doc = {k: v for k, v in MINIMAL.items() if k != "topology"}
    with pytest.raises(ConfigError, match="topology"):
        from_dict(doc)


def test_missing_node_reported_with_stream_id():
    doc = line_doc()
    doc["streams"][0]["destinations"] = ["zCNowhere"]
    rep = validate_scenario(from_dict(doc))
    assert len(rep.errors) == 1
    path, msg = rep.errors[0]
    assert "ctrl" in path + msg and "zCNowhere" in msg


def test_small_frame_rejected_citing_minimum():
    doc = line_doc()
    doc["streams"][2]["frame_size"] = 40
    rep = validate_scenario(from_dict(doc))
    assert len(rep.errors) == 1
    assert "64" in rep.errors[0][1]


def test_all_violations_reported():
    doc = line_doc(duration_ns=0)
    doc["streams"][2]["frame_size"] = 40
    doc["streams"][1]["source"] = "ghost"
    rep = validate_scenario(from_dict(doc))
    assert len(rep.errors) >= 3


def test_shipped_scenarios_validate():
    assert set(shipped_scenarios()) >= {"baseline", "elimination", "reorder", "injection", "delay_demo"}
    for name in shipped_scenarios():
        assert validate_scenario(shipped(name)).ok, name


@pytest.mark.parametrize("name", ["baseline", "elimination", "reorder", "injection", "delay_demo"])
def test_serialize_round_trip_shipped(name):
    cfg = shipped(name)
    assert parse_scenario(serialize(cfg)) == cfg


@given(duration=st.integers(1, 10**12), seed=st.integers(0, 2**64 - 1),
       window=st.integers(2_000, 20_000), proc=st.integers(0, 5_000),
       lo=st.integers(20_000, 100_000), extra=st.integers(0, 100_000))
def test_serialize_round_trip_property(duration, seed, window, proc, lo, extra):
    doc = line_doc(duration_ns=duration, seed=seed)
    doc["topology"]["tas"] = {"window_ns": window}
    doc["topology"]["switch"] = {"processing_ns": proc}
    doc["streams"][1]["cycle_ns"] = [lo, lo + extra]
    cfg = from_dict(doc)
    again = parse_scenario(serialize(cfg))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)


def test_wildcard_destinations_exclude_source():
    cfg = shipped("baseline")
    steer = next(rs for rs in expand_streams(cfg) if rs.spec.id == "manual_steer_by_wire")
    assert steer.source == "zCFrontLeft"
    assert sorted(steer.destinations) == ["zCFrontRight", "zCRearLeft", "zCRearRight"]


def test_config_hash_changes_with_seed():
    cfg = shipped("baseline")
    assert config_hash(cfg) != config_hash(replace(cfg, seed=cfg.seed + 1))
