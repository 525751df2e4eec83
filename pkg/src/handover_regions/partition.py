"""Baseline partitioners and the exact capacity-constrained min-cut oracle."""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import Infeasible, InsufficientCapacity, TooLarge
from .topology import Topology

EXHAUSTIVE_LIMIT = 16
BRANCH_AND_BOUND_LIMIT = 40


@dataclass(frozen=True)
class Partition:
    region_of: tuple[int, ...]
    capacities_respected: bool = True

    @property
    def n_cells(self) -> int:
        return len(self.region_of)

    def blocks(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for cell, r in enumerate(self.region_of):
            out.setdefault(r, []).append(cell)
        return dict(sorted(out.items()))

    def sizes(self) -> dict[int, int]:
        return {r: len(cells) for r, cells in self.blocks().items()}

    def canonical(self) -> tuple[int, ...]:
        """Labels renumbered in order of first appearance."""
        relabel: dict[int, int] = {}
        return tuple(relabel.setdefault(r, len(relabel)) for r in self.region_of)


def _cell_capacity(capacity: float) -> int:
    return int(math.floor(capacity + 1e-9))


def deal_round_robin(order: Sequence[int], regions: Sequence[int],
                     capacities: Sequence[float], n_cells: int) -> list[int]:
    """Deal cells in ``order`` to ``regions`` cyclically, skipping full ones."""
    caps = [_cell_capacity(c) for c in capacities]
    if sum(caps) < len(order):
        raise InsufficientCapacity(f"{len(order)} cells exceed total capacity {sum(caps)}")
    region_of = [-1] * n_cells
    counts = [0] * len(regions)
    idx = 0
    for cell in order:
        while counts[idx] >= caps[idx]:
            idx = (idx + 1) % len(regions)
        region_of[cell] = regions[idx]
        counts[idx] += 1
        idx = (idx + 1) % len(regions)
    return region_of


def random_partition(topology: Topology, n_regions: int, capacity: float, rng) -> Partition:
    n = topology.n_cells
    order = rng.permutation(n).tolist()
    region_of = deal_round_robin(order, list(range(n_regions)), [capacity] * n_regions, n)
    return Partition(tuple(region_of))


def hop_distances(topology: Topology, source: int) -> list[int]:
    dist = [-1] * topology.n_cells
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in topology.neighbors(u):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def farthest_point_seeds(topology: Topology, n_seeds: int) -> list[int]:
    """Greedy farthest-point seeds starting from cell 0.

    Uses Euclidean distance on the coordinates when present, hop distance
    otherwise; ties go to the lowest cell id.
    """
    n = topology.n_cells
    n_seeds = min(n_seeds, n)
    seeds = [0]
    if topology.coordinates is not None:
        xy = np.asarray(topology.coordinates, dtype=float)
        dist_to = lambda s: np.hypot(*(xy - xy[s]).T)
    else:
        dist_to = lambda s: np.asarray(hop_distances(topology, s), dtype=float)
    nearest = dist_to(0)
    while len(seeds) < n_seeds:
        score = nearest.copy()
        score[seeds] = -np.inf
        nxt = int(np.argmax(score))
        seeds.append(nxt)
        nearest = np.minimum(nearest, dist_to(nxt))
    return seeds


def static_partition(topology: Topology, n_regions: int, capacity: float) -> Partition:
    """Geographic baseline: spread seeds, then nearest non-full seed by hops.

    All (hop distance, seed index, cell) triples are visited in ascending
    order and a cell joins the first seed that still has room.
    """
    n = topology.n_cells
    cap = _cell_capacity(capacity)
    if n_regions < 1 or n_regions * cap < n:
        raise InsufficientCapacity(f"{n_regions} regions of capacity {capacity} cannot hold {n} cells")
    seeds = farthest_point_seeds(topology, n_regions)
    dists = [hop_distances(topology, s) for s in seeds]
    triples = sorted((d[c], s, c) for s, d in enumerate(dists) for c in range(n))
    region_of = [-1] * n
    counts = [0] * len(seeds)
    for _, s, c in triples:
        if region_of[c] < 0 and counts[s] < cap:
            region_of[c] = s
            counts[s] += 1
    return Partition(tuple(region_of))


def _region_vector(p: Union[Partition, Sequence[int]]) -> np.ndarray:
    return np.asarray(p.region_of if isinstance(p, Partition) else p)


def cut_value(flow: np.ndarray, p: Union[Partition, Sequence[int]]) -> float:
    """Total flow between cells in different regions, both directions."""
    flow = np.asarray(flow, dtype=float)
    r = _region_vector(p)
    if flow.shape != (len(r), len(r)):
        raise ValueError(f"flow matrix shape {flow.shape} does not match {len(r)} cells")
    return float(flow[r[:, None] != r[None, :]].sum())


def _check_feasible(n: int, n_regions: int, cap: int) -> None:
    if n_regions < 1 or n_regions * cap < n:
        raise Infeasible(f"{n_regions} regions of capacity {cap} cannot hold {n} cells")


def exhaustive_partition(flow: np.ndarray, n_regions: int, capacity: float,
                         chunk: int = 1 << 18) -> tuple[Partition, float]:
    """Enumerate every labeling in lexicographic order; keep the first minimum."""
    flow = np.asarray(flow, dtype=float)
    n = flow.shape[0]
    if n > EXHAUSTIVE_LIMIT:
        raise TooLarge(f"exhaustive enumeration is limited to {EXHAUSTIVE_LIMIT} cells, got {n}")
    cap = _cell_capacity(capacity)
    _check_feasible(n, n_regions, cap)
    w = flow + flow.T
    pairs = [(i, j, w[i, j]) for i in range(n) for j in range(i + 1, n) if w[i, j] != 0]
    powers = n_regions ** np.arange(n - 1, -1, -1, dtype=np.int64)
    total = n_regions ** n
    best_cut, best_index = math.inf, -1
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        labels = (idx[:, None] // powers[None, :]) % n_regions
        feasible = np.ones(len(idx), dtype=bool)
        for r in range(n_regions):
            feasible &= (labels == r).sum(axis=1) <= cap
        cuts = np.zeros(len(idx))
        for i, j, wij in pairs:
            cuts += wij * (labels[:, i] != labels[:, j])
        cuts[~feasible] = np.inf
        k = int(np.argmin(cuts))
        if cuts[k] < best_cut:
            best_cut, best_index = float(cuts[k]), int(idx[k])
    region_of = tuple(int(best_index // int(p)) % n_regions for p in powers)
    return Partition(region_of), best_cut


def branch_and_bound_partition(flow: np.ndarray, n_regions: int,
                               capacity: float) -> tuple[Partition, float]:
    """Depth-first search over cells in id order with region labels in order
    of first use; a branch is cut once the flow already separated reaches
    the best complete cut found so far."""
    flow = np.asarray(flow, dtype=float)
    n = flow.shape[0]
    if n > BRANCH_AND_BOUND_LIMIT:
        raise TooLarge(f"branch and bound is limited to {BRANCH_AND_BOUND_LIMIT} cells, got {n}")
    cap = _cell_capacity(capacity)
    _check_feasible(n, n_regions, cap)
    w = flow + flow.T
    earlier = [[(j, float(w[i, j])) for j in range(i) if w[i, j] != 0] for i in range(n)]
    earlier_total = [math.fsum(x for _, x in e) for e in earlier]
    assign = [-1] * n
    counts = [0] * n_regions
    best_cut = math.inf
    best: Optional[tuple[int, ...]] = None

    def dfs(i: int, cut: float, used: int) -> None:
        nonlocal best_cut, best
        if i == n:
            best_cut, best = cut, tuple(assign)
            return
        same = [0.0] * n_regions
        for j, x in earlier[i]:
            same[assign[j]] += x
        room_needed = n - i - 1
        for r in range(min(used + 1, n_regions)):
            if counts[r] >= cap:
                continue
            new_cut = cut + earlier_total[i] - same[r]
            if new_cut >= best_cut:
                continue
            counts[r] += 1
            new_used = max(used, r + 1)
            # cells still to place must fit into the regions' remaining room
            if sum(cap - c for c in counts) >= room_needed:
                assign[i] = r
                dfs(i + 1, new_cut, new_used)
                assign[i] = -1
            counts[r] -= 1

    dfs(0, 0.0, 0)
    assert best is not None
    return Partition(best), best_cut


def oracle_partition(flow: np.ndarray, n_regions: int, capacity: float,
                     mode: str = "auto") -> tuple[Partition, float]:
    """Minimum-cut partition into at most ``n_regions`` blocks of at most
    ``capacity`` cells; ties resolve to the lexicographically smallest
    region vector."""
    n = np.asarray(flow).shape[0]
    if mode == "auto":
        mode = "exhaustive" if n <= 10 else "branch_and_bound"
    if mode == "exhaustive":
        return exhaustive_partition(flow, n_regions, capacity)
    if mode == "branch_and_bound":
        return branch_and_bound_partition(flow, n_regions, capacity)
    raise ValueError(f"unknown oracle mode {mode!r}")


def enumerate_partitions(n_cells: int, n_regions: int, capacity: float):
    """Every capacity-feasible labeling, lexicographic order (test helper)."""
    cap = _cell_capacity(capacity)
    for labels in itertools.product(range(n_regions), repeat=n_cells):
        if all(labels.count(r) <= cap for r in range(n_regions)):
            yield labels
