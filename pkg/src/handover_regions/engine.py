"""Deterministic discrete-event loop driving cell and MME/AMF agents.

Every handover is processed atomically: classification, protocol
messages, counter update at the target cell, its assignment decision, and
any admission / eviction cascade all complete before the next handover.
"""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import mobility as mob
from .agents import TOMBSTONE, AttractionTable, CellAgent, MmeAgent, Verdict
from .assignment import AssignmentState
from .errors import (ConfigError, HandoverRegionError, InsufficientCapacity, LastRegion,
                     NoCandidate, NoData, RetiredRegion)
from .metrics import (AssignmentChange, AssignmentTimeline, WindowMetrics,
                      compute_window_metrics, convergence_time, steady_state_ratio)
from .partition import deal_round_robin, oracle_partition, static_partition
from .protocol import (Guti, HandoverClass, HandoverRequestMsg, MessageRecord, TauRequestMsg,
                       UeHistory, classify_handover, derive_source_region)
from .rng import substream
from .scenario import Scenario, ScaleEvent
from .topology import Topology, build_topology

log = logging.getLogger(__name__)

_INTER = HandoverClass.S1_INTER


class RegionDirectory:
    """Live regions with their capacities, plus retired ids (never reused)."""

    def __init__(self, capacities: Sequence[float]):
        self.live: dict[int, float] = {i: float(c) for i, c in enumerate(capacities)}
        self.retired: set[int] = set()
        self._next = len(self.live)

    def live_ids(self) -> list[int]:
        return list(self.live)

    def add(self, capacity: float) -> int:
        region = self._next
        self._next += 1
        self.live[region] = float(capacity)
        return region

    def retire(self, region: int) -> None:
        if region not in self.live:
            raise RetiredRegion(region)
        if len(self.live) == 1:
            raise LastRegion(f"region {region} is the only live region")
        del self.live[region]
        self.retired.add(region)


def init_assignment(policy: str, topology: Topology, directory: RegionDirectory, rng,
                    k: int = 1) -> AssignmentState:
    """Initial cell to region association under unit cell load."""
    n = topology.n_cells
    regions = directory.live_ids()
    caps = [directory.live[r] for r in regions]
    cell_caps = [int(math.floor(c + 1e-9)) for c in caps]
    if sum(cell_caps) < k * n:
        raise InsufficientCapacity(f"capacity {sum(cell_caps)} < {k} x {n} cells")
    if k > len(regions):
        raise InsufficientCapacity(f"k={k} exceeds {len(regions)} live regions")
    if policy == "random":
        order = rng.permutation(n).tolist()
        if k == 1:
            return AssignmentState([(r,) for r in deal_round_robin(order, regions, caps, n)])
        return AssignmentState(_deal_k(order, regions, cell_caps, k, n))
    if policy == "static":
        if k != 1:
            raise ConfigError("static initialization supports k = 1 only")
        if len(set(caps)) != 1:
            raise ConfigError("static initialization needs equal capacities")
        part = static_partition(topology, len(regions), caps[0])
        return AssignmentState([(regions[r],) for r in part.region_of])
    if policy == "neighbor_majority":
        return AssignmentState(_neighbor_majority(topology, regions, cell_caps, rng, k))
    raise ConfigError(f"unknown init policy {policy!r}")


def _deal_k(order, regions, caps, k, n):
    counts = [0] * len(regions)
    out: list[tuple] = [()] * n
    idx = 0
    for cell in order:
        picked: list[int] = []
        for _ in range(len(regions)):
            if len(picked) == k:
                break
            if counts[idx] < caps[idx]:
                picked.append(idx)
            idx = (idx + 1) % len(regions)
        if len(picked) < k:
            raise InsufficientCapacity(f"cannot place cell {cell} in {k} distinct regions")
        for i in picked:
            counts[i] += 1
        out[cell] = tuple(sorted(regions[i] for i in picked))
    return out


def _neighbor_majority(topology, regions, caps, rng, k):
    count = dict(zip(regions, [0] * len(regions)))
    cap = dict(zip(regions, caps))
    out: list[tuple] = []
    for cell in range(topology.n_cells):
        votes = Counter(out[v][0] for v in topology.neighbors(cell) if v < cell)
        open_regions = [r for r in regions if count[r] < cap[r]]
        ranked = sorted((r for r in open_regions if votes[r] > 0), key=lambda r: (-votes[r], r))
        rest = [r for r in open_regions if r not in ranked]
        rng.shuffle(rest)
        picked = (ranked + rest)[:k]
        if len(picked) < k:
            raise InsufficientCapacity(f"cannot place cell {cell} in {k} regions")
        for r in picked:
            count[r] += 1
        out.append(tuple(picked))
    return out


def _check_initial(initial, n_cells: int, directory: RegionDirectory, k: int) -> AssignmentState:
    rows = [tuple(int(r) for r in regions) for regions in initial]
    if len(rows) != n_cells:
        raise ConfigError(f"initial assignment covers {len(rows)} of {n_cells} cells")
    for cell, regions in enumerate(rows):
        if len(regions) != k or len(set(regions)) != k:
            raise ConfigError(f"cell {cell} needs {k} distinct regions, got {regions}")
        if any(r not in directory.live for r in regions):
            raise ConfigError(f"cell {cell} names a region outside {sorted(directory.live)}")
    return AssignmentState(rows)


@dataclass
class ForcedAssignment:
    time: int
    cell: int
    region: int
    load_after: float
    capacity: float

    @property
    def over_capacity(self) -> bool:
        return self.load_after > self.capacity + 1e-9


@dataclass
class RunResult:
    scenario: Scenario
    topology: Topology
    events: list
    metrics: list[WindowMetrics]
    log: list[MessageRecord]
    timeline: AssignmentTimeline
    final_assignment: AssignmentState
    forced: list[ForcedAssignment]
    errors: list[str]
    live: tuple = ()
    summary: dict = field(default_factory=dict)

    @property
    def ratios(self) -> list[float]:
        return [m.ratio for m in self.metrics]

    def flow_matrix(self) -> np.ndarray:
        return mob.flow_matrix(self.events, self.topology.n_cells)


class Engine:
    """One simulation run: state of all agents plus the event clock.

    ``replay`` (frozen mode only) pins the assignment to a recorded list of
    :class:`AssignmentChange` entries instead of letting agents decide.
    ``initial`` replaces the scenario's init policy with explicit region
    tuples per cell (capacity is not checked, so fixtures may overfill).
    """

    def __init__(self, scenario: Scenario, topology: Optional[Topology] = None,
                 replay: Optional[Sequence[AssignmentChange]] = None,
                 initial: Optional[Sequence[Sequence[int]]] = None):
        self.scenario = scenario
        seed = scenario.seed
        self.topology = topology if topology is not None else build_topology(
            scenario.topology, scenario.p_x2, substream(seed, "topology"))
        scenario.mobility.check(self.topology)
        params = scenario.agent
        self.params = params
        self.active = scenario.mode == "active"
        if replay is not None and self.active:
            raise ConfigError("assignment replay requires frozen mode")
        self.cost_model = scenario.cost_model
        self.directory = RegionDirectory(scenario.capacities)
        n = self.topology.n_cells
        if initial is None:
            self.assignment = init_assignment(scenario.init_policy, self.topology,
                                              self.directory, substream(seed, "init"), params.k)
        else:
            self.assignment = _check_initial(initial, n, self.directory, params.k)
        self.cells = [CellAgent(c, AttractionTable(params.decay), params.k, params.epsilon)
                      for c in range(n)]
        self.mmes = {r: MmeAgent(r, cap, params.delta) for r, cap in self.directory.live.items()}
        self._uniform = params.cell_load == "uniform"
        self._rate = [0.0] * n
        self._rate_time = [0] * n
        self.clock = 0
        for c in range(n):
            for r in self.assignment.regions(c):
                self.mmes[r].admit(c, self._cell_load(c), 0.0)
        self._phase = 0
        self.log: list[MessageRecord] = []
        self.timeline = AssignmentTimeline(
            initial=self.assignment.snapshot(), capacities=dict(self.directory.live),
            load_snapshots=[])
        self.forced: list[ForcedAssignment] = []
        self.errors: list[str] = []
        self._history: dict[int, UeHistory] = {}
        self._tmsi: dict[int, int] = {}
        self._next_tmsi = 0
        self._pinned = replay is not None
        self._replay: dict[tuple[int, int], list[AssignmentChange]] = {}
        for ch in replay or ():
            self._replay.setdefault((ch.time, ch.phase), []).append(ch)

    # -- helpers -----------------------------------------------------------

    def _cell_load(self, cell: int) -> float:
        if self._uniform:
            return 1.0
        d = self.params.decay
        n = self.topology.n_cells
        if d == 1.0:
            return self._rate[cell] * n / max(self.clock, 1)
        rate = self._rate[cell] * d ** (self.clock - self._rate_time[cell])
        return rate * (1.0 - d) * n

    def _emit(self, kind, ue, source, target, source_region, target_region, label):
        self.log.append(MessageRecord(self.clock, kind, ue, source, target,
                                      source_region, target_region, label))

    def _set_regions(self, cell: int, regions, reason: str) -> None:
        live = self.directory.live
        ordered = self.cells[cell].order_current(regions, live)
        self.assignment.set(cell, ordered)
        self.timeline.changes.append(
            AssignmentChange(self.clock, self._phase, cell, ordered, reason))

    def _attraction_or_empty(self, cell: int) -> dict:
        try:
            return self.cells[cell].attraction(self.directory.live)
        except NoData:
            return {}

    def loads(self) -> dict[int, float]:
        return {r: self.mmes[r].load for r in self.directory.live}

    def _m_tmsi(self, ue: int) -> int:
        tmsi = self._tmsi.get(ue)
        if tmsi is None:
            tmsi = self._tmsi[ue] = self._next_tmsi
            self._next_tmsi += 1
        return tmsi

    # -- admission protocol ------------------------------------------------

    def _request(self, cell: int, target: int, a_n: float, old: int, hop: int = 0) -> Verdict:
        """One ASSIGN_REQ / ASSIGN_RSP exchange; updates membership on success."""
        mme = self.mmes[target]
        self._emit("ASSIGN_REQ", -1, cell, cell, old, target, "")
        decision = mme.handle_assignment_request(cell, self._cell_load(cell), a_n)
        self._emit("ASSIGN_RSP", -1, cell, cell, old, target, decision.verdict.value)
        if decision.verdict is Verdict.REJECT:
            return decision.verdict
        current = [r for r in self.assignment.regions(cell) if r != old]
        if old >= 0:
            self.mmes[old].remove(cell)
        self._set_regions(cell, current + [target], "accept")
        if decision.verdict is Verdict.ACCEPT_WITH_EVICTION:
            self._evict(decision.evicted, target, hop + 1)
        return decision.verdict

    def _evict(self, cell: int, region: int, hop: int) -> None:
        """``region`` has dropped ``cell``; the cell looks for another home."""
        self._emit("REASSIGN_REQ", -1, cell, cell, region, -1, "")
        remaining = [r for r in self.assignment.regions(cell) if r != region]
        self._set_regions(cell, remaining, "evicted")
        self._reassign(cell, region, hop)

    def _reassign(self, cell: int, excluded: int, hop: int) -> None:
        live = self.directory.live
        if len(self.assignment.regions(cell)) >= min(self.params.k, len(live)):
            return
        if hop <= len(live):
            agent = self.cells[cell]
            try:
                candidates = agent.make_reassignment(
                    excluded, list(live), self.loads(), self.assignment.regions(cell))
            except NoCandidate:
                candidates = []
            a = self._attraction_or_empty(cell)
            for m in candidates:
                if self._request(cell, m, a.get(m, 0.0), -1, hop) is not Verdict.REJECT:
                    return
        self._force(cell, excluded)

    def _force(self, cell: int, excluded: int) -> None:
        live = self.directory.live
        current = self.assignment.regions(cell)
        options = [r for r in live if r not in current]
        if not options:
            self.errors.append(f"t={self.clock}: cell {cell} has no region to fall back to")
            return
        target = min(options, key=lambda r: (self.mmes[r].load, r))
        a = self._attraction_or_empty(cell).get(target, 0.0)
        self._emit("ASSIGN_REQ", -1, cell, cell, -1, target, "")
        self.mmes[target].admit(cell, self._cell_load(cell), a)
        self._emit("ASSIGN_RSP", -1, cell, cell, -1, target, "ForcedAssignment")
        self._set_regions(cell, list(current) + [target], "forced")
        mme = self.mmes[target]
        event = ForcedAssignment(self.clock, cell, target, mme.load, mme.capacity)
        self.forced.append(event)
        log.info("forced assignment of cell %d to region %d at t=%d", cell, target, self.clock)

    # -- event handling ----------------------------------------------------

    def process_event(self, event: mob.HandoverEvent) -> HandoverClass:
        src, tgt, ue = event.source, event.target, event.ue
        assignment = self.assignment
        self._phase = 1
        hclass = classify_handover(src, tgt, assignment, self.topology)
        src_region = assignment.primary(src)
        tgt_region = assignment.primary(tgt)
        history = self._history.get(ue)
        if history is None or history.visited[0] != src:
            history = UeHistory((src,))
        msg = HandoverRequestMsg(ue, src, tgt, history)
        self._emit("HO_REQ", ue, src, tgt, src_region, tgt_region, hclass.value)
        if hclass is _INTER:
            msg = TauRequestMsg(ue, Guti(src_region, self._m_tmsi(ue)), tgt)
            self._emit("TAU_REQ", ue, src, tgt, src_region, tgt_region, hclass.value)
            self._tmsi[ue] = self._next_tmsi
            self._next_tmsi += 1
        self._history[ue] = history.push(tgt)
        try:
            source_region = derive_source_region(msg, assignment, self.directory.live)
        except RetiredRegion:
            source_region = TOMBSTONE
        cell = self.cells[tgt]
        cell.record_handover(source_region)
        if not self._uniform:
            d = self.params.decay
            t = self.clock
            self._rate[tgt] = self._rate[tgt] * d ** (t - self._rate_time[tgt]) + 1.0
            self._rate_time[tgt] = t
        if self.params.k > 1:
            current = assignment.regions(tgt)
            ordered = cell.order_current(current, self.directory.live)
            if ordered != current:
                assignment.set(tgt, ordered)
        if self.active:
            try:
                self._decide(tgt)
            except HandoverRegionError as exc:
                self.errors.append(f"t={self.clock}: {exc}")
                log.warning("agent error at t=%d: %s", self.clock, exc)
        else:
            for ch in self._replay.get((self.clock, 1), ()):
                self._pin(ch)
        return hclass

    def _decide(self, cell: int) -> None:
        agent = self.cells[cell]
        live = list(self.directory.live)
        for req in agent.make_assignment_decision(self.assignment.regions(cell), live):
            old = -1 if req.displaces is None else req.displaces
            if old >= 0 and old not in self.assignment.regions(cell):
                continue
            self._request(cell, req.target, req.attraction, old)
        if agent.since_refresh >= self.params.refresh_interval:
            agent.since_refresh = 0
            a = self._attraction_or_empty(cell)
            load = self._cell_load(cell)
            for r in self.assignment.regions(cell):
                self._emit("ASSIGN_REQ", -1, cell, cell, r, r, "")
                self.mmes[r].refresh_attraction(cell, a.get(r, 0.0), load)
                self._emit("ASSIGN_RSP", -1, cell, cell, r, r, "Refresh")

    def _pin(self, change: AssignmentChange) -> None:
        cell = change.cell
        new = tuple(change.regions)
        for r in self.assignment.regions(cell):
            if r not in new and r in self.mmes and cell in self.mmes[r]:
                self.mmes[r].remove(cell)
        for r in new:
            if cell not in self.mmes[r]:
                self.mmes[r].admit(cell, self._cell_load(cell), 0.0)
        self.assignment.set(cell, new)
        self.timeline.changes.append(change._replace(reason="pinned"))

    def apply_scale_event(self, ev: ScaleEvent) -> Optional[int]:
        """Grow or shrink the directory; returns the new region id on scale-up."""
        self._phase = 0
        if ev.action == "scale_up":
            region = self.directory.add(ev.capacity)
            self.mmes[region] = MmeAgent(region, ev.capacity, self.params.delta)
            self.timeline.scale_log.append((self.clock, "scale_up", region))
            self.timeline.capacities[region] = float(ev.capacity)
            return region
        region = ev.region
        self.directory.retire(region)
        self.timeline.scale_log.append((self.clock, "scale_down", region))
        mme = self.mmes.pop(region)
        if self._pinned:
            for ch in self._replay.get((self.clock, 0), ()):
                self._pin(ch)
            return None
        for cell in sorted(mme.assigned):
            self._evict(cell, region, hop=1)
        return None

    def _snapshot_loads(self) -> None:
        self.timeline.load_snapshots.append(self.loads())

    # -- main loop ---------------------------------------------------------

    def run(self, events: Sequence[mob.HandoverEvent]) -> RunResult:
        sc = self.scenario
        window = sc.window
        scale = list(sc.scale_events)
        si = 0
        n = len(events)
        for t, ev in enumerate(events):
            self.clock = t
            while si < len(scale) and scale[si].time <= t:
                self.apply_scale_event(scale[si])
                si += 1
            self.process_event(ev)
            if (t + 1) % window == 0:
                self._snapshot_loads()
        self.clock = n
        trailing = si < len(scale)
        while si < len(scale):
            self.apply_scale_event(scale[si])
            si += 1
        if n % window or (trailing and n):
            if n % window == 0:
                self.timeline.load_snapshots.pop()
            self._snapshot_loads()
        metrics = compute_window_metrics(self.log, self.timeline, window, sc.cost_model, n)
        result = RunResult(sc, self.topology, list(events), metrics, self.log, self.timeline,
                           self.assignment, self.forced, self.errors,
                           tuple(self.directory.live))
        result.summary = summarize(result)
        return result


def generate_events(scenario: Scenario, topology: Topology) -> list[mob.HandoverEvent]:
    return mob.generate_handovers(scenario.mobility, topology, scenario.n_ues,
                                  scenario.n_events, substream(scenario.seed, "mobility"))


def run(scenario: Scenario, topology: Optional[Topology] = None, events=None,
        replay: Optional[Sequence[AssignmentChange]] = None,
        initial: Optional[Sequence[Sequence[int]]] = None) -> RunResult:
    """Simulate ``scenario`` end to end; deterministic in (scenario, seed)."""
    engine = Engine(scenario, topology, replay=replay, initial=initial)
    if events is None:
        events = generate_events(scenario, engine.topology)
    if scenario.mobility.kind == "trace":
        events = [ev._replace(time=i) for i, ev in enumerate(events)]
    return engine.run(events)


def summarize(result: RunResult) -> dict:
    sc = result.scenario
    metrics = result.metrics
    by_class = Counter(rec.hclass for rec in result.log if rec.kind == "HO_REQ")
    exchanges = sum(1 for rec in result.log if rec.kind in ("ASSIGN_REQ", "REASSIGN_REQ"))
    cm = sc.cost_model
    signaling = {
        HandoverClass.X2.value: by_class[HandoverClass.X2.value] * cm.msgs_x2,
        HandoverClass.S1_INTRA.value: by_class[HandoverClass.S1_INTRA.value] * cm.msgs_s1_intra,
        HandoverClass.S1_INTER.value: by_class[HandoverClass.S1_INTER.value] * cm.msgs_s1_inter,
        "assignment_change": exchanges * cm.msgs_assignment_change,
    }
    ratios = [m.ratio for m in metrics]
    try:
        conv = convergence_time(ratios, 0.01) if ratios else None
    except HandoverRegionError:
        conv = None
    n_events = len(result.events)
    inter = by_class[HandoverClass.S1_INTER.value]
    final_loads = {str(r): v for r, v in (metrics[-1].loads.items() if metrics else [])}
    out = {
        "scenario_digest": sc.digest(),
        "seed": sc.seed,
        "mode": sc.mode,
        "init_policy": sc.init_policy,
        "n_cells": result.topology.n_cells,
        "n_events": n_events,
        "final_ratio": ratios[-1] if ratios else 0.0,
        "steady_state_ratio": steady_state_ratio(metrics),
        "overall_ratio": inter / n_events if n_events else 0.0,
        "convergence_window": conv,
        "handovers_by_class": {k.value: by_class[k.value] for k in HandoverClass},
        "signaling_by_class": signaling,
        "signaling_total": sum(signaling.values()),
        "assignment_changes": len(result.timeline.changes),
        "forced_assignments": len(result.forced),
        "max_load": max((m.max_load for m in metrics), default=0.0),
        "final_loads": final_loads,
        "final_primary": list(result.final_assignment.primaries()),
        "errors": len(result.errors),
    }
    if sc.oracle is not None:
        out.update(oracle_summary(result))
    return out


def oracle_summary(result: RunResult) -> dict:
    """Optimal cut of the realized flow matrix over the initial regions."""
    sc = result.scenario
    n_events = len(result.events)
    try:
        part, cut = oracle_partition(result.flow_matrix(), len(sc.capacities),
                                     min(sc.capacities), sc.oracle or "auto")
    except HandoverRegionError as exc:
        return {"oracle_cut": None, "oracle_ratio": None, "oracle_error": str(exc)}
    return {
        "oracle_cut": cut,
        "oracle_ratio": cut / n_events if n_events else 0.0,
        "oracle_partition": list(part.region_of),
    }
