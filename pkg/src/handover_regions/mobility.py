"""UE movement: synthetic handover streams, trace files and flow matrices."""
from __future__ import annotations

import csv
import weakref
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, NonAdjacentHandover, ParseError
from .topology import Topology

TRACE_HEADER = ("time", "ue", "source", "target")
MODEL_KINDS = ("random_walk", "community_flow", "trace")


class HandoverEvent(NamedTuple):
    time: int
    ue: int
    source: int
    target: int


@dataclass(frozen=True)
class MobilityModel:
    """How a UE picks its next cell.

    ``p_move`` is the chance that a stepped UE moves at all; ``q`` is the
    chance that a ``community_flow`` move stays inside the UE's community.
    """

    kind: str = "random_walk"
    q: float = 0.95
    p_move: float = 0.5
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown mobility model {self.kind!r}")
        if not 0.0 < self.q <= 1.0:
            raise ConfigError(f"q must lie in (0, 1], got {self.q}")
        if not 0.0 < self.p_move <= 1.0:
            raise ConfigError(f"p_move must lie in (0, 1], got {self.p_move}")
        if self.kind == "trace" and not self.path:
            raise ConfigError("trace mobility needs a path")

    def check(self, topology: Topology) -> None:
        if self.kind == "community_flow" and topology.communities is None:
            raise ConfigError("community_flow mobility requires a community topology")


_split_cache: "weakref.WeakKeyDictionary[Topology, list]" = weakref.WeakKeyDictionary()


def _split_neighbors(topology: Topology):
    """Per cell: (same-community neighbors, cross-community neighbors)."""
    split = _split_cache.get(topology)
    if split is None:
        labels = topology.communities
        split = []
        for c in range(topology.n_cells):
            nb = topology.neighbors(c)
            same = tuple(v for v in nb if labels[v] == labels[c])
            cross = tuple(v for v in nb if labels[v] != labels[c])
            split.append((same, cross))
        _split_cache[topology] = split
    return split


def step_ue(model: MobilityModel, topology: Topology, current: int, rng,
            force_move: bool = False) -> Optional[int]:
    """Next cell for a UE at ``current``, or None when it stays put."""
    if not force_move and rng.random() >= model.p_move:
        return None
    if model.kind == "community_flow":
        same, cross = _split_neighbors(topology)[current]
        if same and (not cross or rng.random() < model.q):
            choices = same
        else:
            choices = cross
    else:
        choices = topology.neighbors(current)
    return choices[int(rng.integers(len(choices)))]


def generate_handovers(model: MobilityModel, topology: Topology, n_ues: int,
                       n_events: int, rng) -> list[HandoverEvent]:
    """Exactly ``n_events`` handovers from ``n_ues`` independent walkers.

    UEs start on uniformly drawn cells; every tick steps one uniformly
    drawn UE and ticks where the UE stays do not produce an event.
    """
    if model.kind == "trace":
        return load_trace(model.path, topology)
    if n_ues < 1:
        raise ConfigError("n_ues must be at least 1")
    if n_events < 0:
        raise ConfigError("n_events must be non-negative")
    model.check(topology)
    position = rng.integers(topology.n_cells, size=n_ues).tolist()
    events: list[HandoverEvent] = []
    while len(events) < n_events:
        ue = int(rng.integers(n_ues))
        nxt = step_ue(model, topology, position[ue], rng)
        if nxt is None:
            continue
        events.append(HandoverEvent(len(events), ue, position[ue], nxt))
        position[ue] = nxt
    return events


def load_trace(path, topology: Optional[Topology] = None) -> list[HandoverEvent]:
    """Read a ``time,ue,source,target`` CSV, validating against ``topology``."""
    events: list[HandoverEvent] = []
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
            raise ParseError(1, f"expected header {','.join(TRACE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            events.append(_parse_row(row, lineno, topology, events[-1].time if events else None))
    return events


def _parse_row(row: Sequence[str], lineno: int, topology: Optional[Topology],
               last_time: Optional[int]) -> HandoverEvent:
    if len(row) != 4:
        raise ParseError(lineno, f"expected 4 fields, got {len(row)}")
    try:
        time, ue, source, target = (int(x) for x in row)
    except ValueError:
        raise ParseError(lineno, "fields must be integers") from None
    if min(time, ue, source, target) < 0:
        raise ParseError(lineno, "fields must be non-negative")
    if source == target:
        raise ParseError(lineno, "source and target cell are equal")
    if last_time is not None and time <= last_time:
        raise ParseError(lineno, "time must be strictly ascending")
    if topology is not None:
        if source >= topology.n_cells or target >= topology.n_cells:
            raise ParseError(lineno, "cell id outside the topology")
        if not topology.adjacent(source, target):
            raise NonAdjacentHandover(lineno, f"cells {source} and {target} are not neighbors")
    return HandoverEvent(time, ue, source, target)


def parse_trace_line(line: str, topology: Optional[Topology] = None) -> HandoverEvent:
    return _parse_row(line.strip().split(","), 1, topology, None)


def write_trace(events: Iterable[HandoverEvent], path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        writer.writerows(events)


def flow_matrix(events: Iterable[HandoverEvent], n_cells: int) -> np.ndarray:
    """``counts[i, j]`` = number of handovers from cell i to cell j."""
    counts = np.zeros((n_cells, n_cells))
    for ev in events:
        counts[ev.source, ev.target] += 1
    return counts
