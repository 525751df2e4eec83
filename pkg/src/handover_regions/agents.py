"""Cell and MME/AMF agents of the self-organization.

A cell counts handover arrivals per source region and derives its energy
of attraction towards each live region; it asks the most attractive
regions to manage it.  A region admits cells while it has headroom and
otherwise trades its least attracted cell for a more attracted newcomer.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .errors import EmptyRegionOverflow, NoCandidate, NoData, NotAssigned

# Counter bucket for handovers whose source region is no longer live.
TOMBSTONE = -1


@dataclass(slots=True)
class AttractionTable:
    """Decayed handover arrival counters keyed by source region."""

    decay: float = 1.0
    counters: dict = field(default_factory=dict)
    total: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.decay <= 1.0:
            raise ValueError(f"decay must lie in (0, 1], got {self.decay}")

    def record(self, region: int) -> None:
        counters = self.counters
        if self.decay != 1.0:
            d = self.decay
            for m in counters:
                counters[m] *= d
        counters[region] = counters.get(region, 0.0) + 1.0
        self.total = math.fsum(counters.values())

    def scaled(self, factor: float) -> "AttractionTable":
        return AttractionTable(self.decay, {m: v * factor for m, v in self.counters.items()},
                               self.total * factor)


def attraction(counters: Mapping[int, float], live: Iterable[int]) -> dict[int, float]:
    """Share of counted arrivals per live region.

    Raises NoData when no arrivals from any live region were counted.
    """
    live = list(live)
    denom = math.fsum(counters.get(m, 0.0) for m in live)
    if denom <= 0.0:
        raise NoData("no handovers counted from live regions")
    return {m: counters.get(m, 0.0) / denom for m in live}


class AssignmentRequest(NamedTuple):
    target: int
    attraction: float
    displaces: Optional[int]


@dataclass(slots=True)
class CellAgent:
    cell: int
    table: AttractionTable = field(default_factory=AttractionTable)
    k: int = 1
    epsilon: float = 0.05
    since_refresh: int = 0

    def record_handover(self, source_region: int) -> None:
        self.table.record(source_region)
        self.since_refresh += 1

    def attraction(self, live: Iterable[int]) -> dict[int, float]:
        return attraction(self.table.counters, live)

    def order_current(self, current: Sequence[int], live: Iterable[int]) -> tuple[int, ...]:
        """Members sorted so the most attracted one (the primary) comes first."""
        if len(current) < 2:
            return tuple(current)
        try:
            a = self.attraction(live)
        except NoData:
            a = {}
        return tuple(sorted(current, key=lambda m: (-a.get(m, 0.0), m)))

    def make_assignment_decision(self, current: Sequence[int],
                                 live: Sequence[int]) -> list[AssignmentRequest]:
        """Requests towards top-k regions the cell is not yet managed by.

        A request is only issued when the newcomer's attraction beats that of
        the member it would displace by at least ``epsilon``.
        """
        try:
            a = self.attraction(live)
        except NoData:
            return []
        top = sorted(live, key=lambda m: (-a[m], m))[: self.k]
        if set(top) == set(current):
            return []
        newcomers = [m for m in top if m not in current]
        # retired members sort first: they are the first to be displaced
        displaced = sorted((m for m in current if m not in top),
                           key=lambda m: (a.get(m, -1.0), m))
        requests = []
        for i, m in enumerate(newcomers):
            victim = displaced[i] if i < len(displaced) else None
            if victim is not None and a[m] - a.get(victim, 0.0) < self.epsilon:
                continue
            requests.append(AssignmentRequest(m, a[m], victim))
        return requests

    def make_reassignment(self, excluded: Optional[int], live: Sequence[int],
                          loads: Mapping[int, float],
                          current: Sequence[int] = ()) -> list[int]:
        """Candidate regions to try, best first.

        Regions the cell is attracted to come first by descending attraction;
        the rest follow by ascending load, then id.
        """
        candidates = [m for m in live if m != excluded and m not in current]
        if not candidates:
            raise NoCandidate(f"cell {self.cell} has no region besides {excluded}")
        try:
            a = self.attraction(live)
        except NoData:
            a = {}

        def key(m):
            am = a.get(m, 0.0)
            return (0, -am, 0.0, m) if am > 0.0 else (1, 0.0, loads.get(m, 0.0), m)

        return sorted(candidates, key=key)


class Verdict(str, Enum):
    ACCEPT = "Accept"
    ACCEPT_WITH_EVICTION = "AcceptWithEviction"
    REJECT = "Reject"


@dataclass(frozen=True)
class AssignmentDecision:
    verdict: Verdict
    evicted: Optional[int] = None


ACCEPT = AssignmentDecision(Verdict.ACCEPT)
REJECT = AssignmentDecision(Verdict.REJECT)


@dataclass(slots=True)
class MmeAgent:
    """Region side of the admission protocol.

    ``assigned`` maps each managed cell to the load it reported and
    ``attraction_of`` to the attraction it last reported.  Both views may be
    stale between refreshes.
    """

    region: int
    capacity: float
    delta: float = 0.05
    assigned: dict = field(default_factory=dict)
    attraction_of: dict = field(default_factory=dict)
    load: float = 0.0
    _heap: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")

    def __contains__(self, cell: int) -> bool:
        return cell in self.assigned

    def _push(self, cell: int, a: float) -> None:
        heap = self._heap
        heapq.heappush(heap, (a, cell))
        if len(heap) > 4 * len(self.assigned) + 64:
            self._heap = [(v, c) for c, v in self.attraction_of.items()]
            heapq.heapify(self._heap)

    def min_attraction(self) -> tuple[float, int]:
        """(min attraction, cell holding it); ties go to the lower cell id."""
        heap = self._heap
        while heap:
            a, cell = heap[0]
            if self.attraction_of.get(cell) == a:
                return a, cell
            heapq.heappop(heap)
        raise NotAssigned(f"region {self.region} manages no cells")

    def admit(self, cell: int, cell_load: float, a_n: float) -> None:
        """Add ``cell`` unconditionally (initial deal and forced fallback)."""
        self.assigned[cell] = cell_load
        self.attraction_of[cell] = a_n
        self.load += cell_load
        self._push(cell, a_n)

    def remove(self, cell: int) -> None:
        try:
            cell_load = self.assigned.pop(cell)
        except KeyError:
            raise NotAssigned(f"cell {cell} is not managed by region {self.region}") from None
        del self.attraction_of[cell]
        self.load -= cell_load
        if not self.assigned:
            self.load = 0.0
            self._heap.clear()

    def handle_assignment_request(self, cell: int, cell_load: float,
                                  a_n: float) -> AssignmentDecision:
        if cell in self.assigned:
            raise ValueError(f"cell {cell} is already managed by region {self.region}")
        if self.load + cell_load < self.capacity:
            self.admit(cell, cell_load, a_n)
            return ACCEPT
        if not self.assigned:
            raise EmptyRegionOverflow(
                f"cell load {cell_load} does not fit empty region {self.region} "
                f"with capacity {self.capacity}"
            )
        a_min, victim = self.min_attraction()
        if a_n > a_min + self.delta:
            self.remove(victim)
            self.admit(cell, cell_load, a_n)
            return AssignmentDecision(Verdict.ACCEPT_WITH_EVICTION, victim)
        return REJECT

    def refresh_attraction(self, cell: int, a_n: float,
                           cell_load: Optional[float] = None) -> None:
        if cell not in self.assigned:
            raise NotAssigned(f"cell {cell} is not managed by region {self.region}")
        if cell_load is not None:
            self.load += cell_load - self.assigned[cell]
            self.assigned[cell] = cell_load
        if self.attraction_of[cell] != a_n:
            self.attraction_of[cell] = a_n
            self._push(cell, a_n)
