import json

import pytest

from handover_regions.errors import ConfigError
from handover_regions.scenario import Scenario, load_scenario

BASE = {"topology": {"kind": "grid", "width": 3, "height": 3}}


def parse(**kw):
    return Scenario.from_dict({**BASE, **kw})


def test_defaults():
    sc = parse()
    assert sc.capacities == (12.0, 12.0) and sc.agent.k == 1
    assert sc.agent.decay == 0.995 and sc.agent.epsilon == 0.05 and sc.agent.delta == 0.05
    assert sc.agent.refresh_interval == 100 and sc.window == 500
    assert sc.cost_model.msgs_s1_inter == 18 and sc.mode == "active"


@pytest.mark.parametrize("doc, key", [
    ({"bogus": 1}, "'bogus'"),
    ({"agent": {"foo": 1}}, "'agent.foo'"),
    ({"topology": {"kind": "grid", "width": 2, "height": 2, "depth": 1}}, "'topology.depth'"),
    ({"scale_events": [{"time": 1, "action": "scale_up", "capacity": 3, "x": 0}]},
     "'scale_events[0].x'"),
])
def test_unknown_keys_named(doc, key):
    with pytest.raises(ConfigError, match=key.replace("[", r"\[").replace("]", r"\]")):
        Scenario.from_dict({**BASE, **doc})


@pytest.mark.parametrize("doc", [
    {"topology": {"kind": "hex"}},
    {"mode": "lazy"},
    {"agent": {"decay": 0}},
    {"agent": {"k": 3}},
    {"regions": {"count": 2, "capacity": -1}},
    {"regions": {"capacities": [3], "count": 1}},
    {"n_events": -1},
    {"p_x2": 1.5},
    {"mobility": {"kind": "community_flow"}},
    {"scale_events": [{"time": 5, "action": "scale_down", "region": 0},
                      {"time": 4, "action": "scale_down", "region": 1}]},
    {"scale_events": [{"time": 5, "action": "scale_down", "region": 9}]},
    {"seed": "one"},
    {"message_log": "yes"},
])
def test_invalid(doc):
    with pytest.raises(ConfigError):
        Scenario.from_dict({**BASE, **doc})


def test_missing_topology():
    with pytest.raises(ConfigError, match="topology"):
        Scenario.from_dict({})


def test_scale_up_ids_are_fresh():
    sc = parse(scale_events=[{"time": 1, "action": "scale_up", "capacity": 4},
                             {"time": 2, "action": "scale_down", "region": 2}])
    assert sc.scale_events[1].region == 2


def test_roundtrip_and_digest(tmp_path):
    sc = parse(seed=3, regions={"capacities": [5, 6]}, oracle={"mode": "auto"})
    again = Scenario.from_dict(sc.to_dict())
    assert again == sc and again.digest() == sc.digest()
    assert sc.replace(seed=9).digest() == sc.digest()
    assert sc.replace(message_log=True).digest() == sc.digest()
    assert sc.replace(mode="frozen").digest() != sc.digest()
    assert isinstance(sc.to_dict()["cost_model"]["msgs_x2"], int)


def test_load_reports_json_position(tmp_path):
    p = tmp_path / "s.json"
    p.write_text('{\n  "topology": {\n}, oops\n}')
    with pytest.raises(ConfigError, match="line 3"):
        load_scenario(p)


def test_relative_paths_follow_scenario_file(tmp_path):
    (tmp_path / "sub").mkdir()
    doc = {"topology": {"kind": "file", "path": "cells.txt"},
           "mobility": {"kind": "trace", "path": "sub/trace.csv"}}
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    sc = load_scenario(p)
    assert sc.topology["path"] == str(tmp_path / "cells.txt")
    assert sc.mobility.path == str(tmp_path / "sub" / "trace.csv")
