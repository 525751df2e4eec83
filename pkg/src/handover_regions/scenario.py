"""Scenario documents: JSON parsing, validation and digests.

A scenario is a JSON object; every key below is optional except
``topology``.  Unknown keys are rejected at every level::

    {
      "topology": {"kind": "community", "n_communities": 2,
                   "cells_per_community": 12, "inter_edges": 2},
      "p_x2": 1.0,
      "mobility": {"kind": "community_flow", "q": 0.95, "p_move": 0.5},
      "n_ues": 100,
      "n_events": 20000,
      "regions": {"count": 2, "capacity": 12},      # or {"capacities": [12, 12]}
      "init_policy": "random",                      # random | neighbor_majority | static
      "agent": {"k": 1, "decay": 0.995, "epsilon": 0.05, "delta": 0.05,
                "cell_load": "uniform", "refresh_interval": 100},
      "cost_model": {"msgs_x2": 8, "msgs_s1_intra": 12, "msgs_s1_inter": 18,
                     "msgs_assignment_change": 2},
      "scale_events": [{"time": 10000, "action": "scale_up", "capacity": 12},
                       {"time": 15000, "action": "scale_down", "region": 0}],
      "mode": "active",                             # active | frozen
      "seed": 1,
      "window": 500,
      "message_log": false,
      "oracle": {"mode": "auto"}                    # or null
    }
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError
from .mobility import MODEL_KINDS, MobilityModel
from .protocol import SignalingCostModel

INIT_POLICIES = ("random", "neighbor_majority", "static")
MODES = ("active", "frozen")
CELL_LOAD_MODES = ("uniform", "arrival_rate")
ORACLE_MODES = ("auto", "exhaustive", "branch_and_bound")

_TOP_KEYS = {"topology", "p_x2", "mobility", "n_ues", "n_events", "regions", "init_policy",
             "agent", "cost_model", "scale_events", "mode", "seed", "window", "message_log",
             "oracle"}
_TOPOLOGY_KEYS = {
    "grid": {"kind", "width", "height"},
    "community": {"kind", "n_communities", "cells_per_community", "inter_edges"},
    "explicit": {"kind", "n_cells", "edges", "coordinates"},
    "file": {"kind", "path"},
}


@dataclass(frozen=True)
class AgentParams:
    k: int = 1
    decay: float = 0.995
    epsilon: float = 0.05
    delta: float = 0.05
    cell_load: str = "uniform"
    refresh_interval: int = 100


@dataclass(frozen=True)
class ScaleEvent:
    time: int
    action: str
    capacity: Optional[float] = None
    region: Optional[int] = None

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"time": self.time, "action": self.action}
        if self.action == "scale_up":
            d["capacity"] = self.capacity
        else:
            d["region"] = self.region
        return d


@dataclass(frozen=True)
class Scenario:
    topology: dict
    p_x2: float = 1.0
    mobility: MobilityModel = field(default_factory=MobilityModel)
    n_ues: int = 100
    n_events: int = 20000
    capacities: tuple = (12.0, 12.0)
    init_policy: str = "random"
    agent: AgentParams = field(default_factory=AgentParams)
    cost_model: SignalingCostModel = field(default_factory=SignalingCostModel)
    scale_events: tuple = ()
    mode: str = "active"
    seed: int = 0
    window: int = 500
    message_log: bool = False
    oracle: Optional[str] = None

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        return _parse(doc)

    @classmethod
    def from_json(cls, path) -> "Scenario":
        return load_scenario(path)

    def to_dict(self) -> dict:
        return {
            "topology": dict(self.topology),
            "p_x2": self.p_x2,
            "mobility": {k: v for k, v in dataclasses.asdict(self.mobility).items()
                         if v is not None},
            "n_ues": self.n_ues,
            "n_events": self.n_events,
            "regions": {"capacities": list(self.capacities)},
            "init_policy": self.init_policy,
            "agent": dataclasses.asdict(self.agent),
            "cost_model": dataclasses.asdict(self.cost_model),
            "scale_events": [ev.to_dict() for ev in self.scale_events],
            "mode": self.mode,
            "seed": self.seed,
            "window": self.window,
            "message_log": self.message_log,
            "oracle": None if self.oracle is None else {"mode": self.oracle},
        }

    def digest(self) -> str:
        """Content hash of the normalized document.

        The seed and the message-log switch are left out: neither changes
        what is simulated, only which draw or which extra file.
        """
        doc = self.to_dict()
        doc.pop("seed")
        doc.pop("message_log")
        canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("ascii")).hexdigest()

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


def load_scenario(path) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    sc = _parse(doc)
    # file references are relative to the scenario document
    base = Path(path).parent
    changes = {}
    topo_path = sc.topology.get("path")
    if isinstance(topo_path, str) and not Path(topo_path).is_absolute():
        changes["topology"] = {**sc.topology, "path": str(base / topo_path)}
    trace = sc.mobility.path
    if isinstance(trace, str) and not Path(trace).is_absolute():
        changes["mobility"] = dataclasses.replace(sc.mobility, path=str(base / trace))
    return sc.replace(**changes) if changes else sc


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown key '{where}.{key}'" if where else f"unknown key '{key}'")


def _obj(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"'{where}' must be an object")
    return value


def _int(value, where: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{where}' must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"'{where}' must be >= {minimum}, got {value}")
    return value


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{where}' must be a number, got {value!r}")
    return float(value)


def _choice(value, options, where: str) -> str:
    if value not in options:
        raise ConfigError(f"'{where}' must be one of {', '.join(options)}; got {value!r}")
    return value


def _parse(doc: Any) -> Scenario:
    doc = _obj(doc, "scenario")
    _reject_unknown(doc, _TOP_KEYS, "")
    if "topology" not in doc:
        raise ConfigError("missing required key 'topology'")
    topo = _obj(doc["topology"], "topology")
    kind = _choice(topo.get("kind"), tuple(_TOPOLOGY_KEYS), "topology.kind")
    _reject_unknown(topo, _TOPOLOGY_KEYS[kind], "topology")

    mob = _obj(doc.get("mobility", {}), "mobility")
    _reject_unknown(mob, {"kind", "q", "p_move", "path"}, "mobility")
    mobility = MobilityModel(
        kind=_choice(mob.get("kind", "random_walk"), MODEL_KINDS, "mobility.kind"),
        q=_num(mob.get("q", 0.95), "mobility.q"),
        p_move=_num(mob.get("p_move", 0.5), "mobility.p_move"),
        path=mob.get("path"),
    )
    if mobility.kind == "community_flow" and kind != "community":
        raise ConfigError("'mobility.kind' community_flow requires a community topology")

    regions = _obj(doc.get("regions", {"count": 2, "capacity": 12}), "regions")
    _reject_unknown(regions, {"count", "capacity", "capacities"}, "regions")
    if "capacities" in regions:
        if "count" in regions or "capacity" in regions:
            raise ConfigError("'regions' takes either capacities or count/capacity")
        caps = regions["capacities"]
        if not isinstance(caps, list) or not caps:
            raise ConfigError("'regions.capacities' must be a non-empty list")
        capacities = tuple(_num(c, "regions.capacities[]") for c in caps)
    else:
        count = _int(regions.get("count", 2), "regions.count", 1)
        capacities = (_num(regions.get("capacity", 12), "regions.capacity"),) * count
    if any(c <= 0 for c in capacities):
        raise ConfigError("region capacities must be positive")

    ag = _obj(doc.get("agent", {}), "agent")
    _reject_unknown(ag, {f.name for f in dataclasses.fields(AgentParams)}, "agent")
    agent = AgentParams(
        k=_int(ag.get("k", 1), "agent.k", 1),
        decay=_num(ag.get("decay", 0.995), "agent.decay"),
        epsilon=_num(ag.get("epsilon", 0.05), "agent.epsilon"),
        delta=_num(ag.get("delta", 0.05), "agent.delta"),
        cell_load=_choice(ag.get("cell_load", "uniform"), CELL_LOAD_MODES, "agent.cell_load"),
        refresh_interval=_int(ag.get("refresh_interval", 100), "agent.refresh_interval", 1),
    )
    if not 0.0 < agent.decay <= 1.0:
        raise ConfigError("'agent.decay' must lie in (0, 1]")
    if agent.epsilon < 0 or agent.delta < 0:
        raise ConfigError("'agent.epsilon' and 'agent.delta' must be non-negative")
    if agent.k > len(capacities):
        raise ConfigError("'agent.k' exceeds the number of initial regions")

    cm = _obj(doc.get("cost_model", {}), "cost_model")
    _reject_unknown(cm, {f.name for f in dataclasses.fields(SignalingCostModel)}, "cost_model")
    cost_model = SignalingCostModel(**{
        k: v if isinstance(v, int) and not isinstance(v, bool) else _num(v, f"cost_model.{k}")
        for k, v in cm.items()})

    n_events = _int(doc.get("n_events", 20000), "n_events", 0)
    scale_events = tuple(_parse_scale(e, i) for i, e in enumerate(doc.get("scale_events", [])))
    _check_scale_sequence(scale_events, len(capacities))

    init_policy = _choice(doc.get("init_policy", "random"), INIT_POLICIES, "init_policy")
    if init_policy == "static" and agent.k != 1:
        raise ConfigError("'init_policy' static supports k = 1 only")
    oracle = doc.get("oracle")
    if oracle is not None:
        _reject_unknown(_obj(oracle, "oracle"), {"mode"}, "oracle")
        oracle = _choice(oracle.get("mode", "auto"), ORACLE_MODES, "oracle.mode")
    message_log = doc.get("message_log", False)
    if not isinstance(message_log, bool):
        raise ConfigError("'message_log' must be true or false")
    p_x2 = _num(doc.get("p_x2", 1.0), "p_x2")
    if not 0.0 <= p_x2 <= 1.0:
        raise ConfigError("'p_x2' must lie in [0, 1]")

    return Scenario(
        topology=dict(topo),
        p_x2=p_x2,
        mobility=mobility,
        n_ues=_int(doc.get("n_ues", 100), "n_ues", 1),
        n_events=n_events,
        capacities=capacities,
        init_policy=init_policy,
        agent=agent,
        cost_model=cost_model,
        scale_events=scale_events,
        mode=_choice(doc.get("mode", "active"), MODES, "mode"),
        seed=_int(doc.get("seed", 0), "seed", 0),
        window=_int(doc.get("window", 500), "window", 1),
        message_log=message_log,
        oracle=oracle,
    )


def _parse_scale(e, i: int) -> ScaleEvent:
    where = f"scale_events[{i}]"
    e = _obj(e, where)
    action = _choice(e.get("action"), ("scale_up", "scale_down"), f"{where}.action")
    if action == "scale_up":
        _reject_unknown(e, {"time", "action", "capacity"}, where)
        cap = _num(e.get("capacity"), f"{where}.capacity")
        if cap <= 0:
            raise ConfigError(f"'{where}.capacity' must be positive")
        return ScaleEvent(_int(e.get("time"), f"{where}.time", 0), action, capacity=cap)
    _reject_unknown(e, {"time", "action", "region"}, where)
    return ScaleEvent(_int(e.get("time"), f"{where}.time", 0), action,
                      region=_int(e.get("region"), f"{where}.region", 0))


def _check_scale_sequence(events, n_initial: int) -> None:
    live = set(range(n_initial))
    next_id = n_initial
    last_time = -1
    for i, ev in enumerate(events):
        if ev.time < last_time:
            raise ConfigError(f"'scale_events[{i}]' is out of time order")
        last_time = ev.time
        if ev.action == "scale_up":
            live.add(next_id)
            next_id += 1
        else:
            if ev.region not in live:
                raise ConfigError(f"'scale_events[{i}].region' {ev.region} is not live at time {ev.time}")
            if len(live) == 1:
                raise ConfigError(f"'scale_events[{i}]' would retire the last live region")
            live.remove(ev.region)
