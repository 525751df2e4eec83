"""Static cell graph: mobility adjacency plus the direct (X2/Xn) link subset.

Topologies are built from small JSON-friendly spec dictionaries::

    {"kind": "grid", "width": 5, "height": 4}
    {"kind": "community", "n_communities": 2, "cells_per_community": 12,
     "inter_edges": 2}
    {"kind": "explicit", "n_cells": 3, "edges": [[0, 1], [1, 2]]}
    {"kind": "file", "path": "cells.txt"}

Community cells are numbered contiguously per community and each community
is a clique.  Bridge ``j`` between community ``c`` and ``c + 1`` joins the
``j``-th last cell of ``c`` to the ``j``-th first cell of ``c + 1``;
communities form a ring when there are three or more of them.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DisconnectedGraph, MalformedSpec, ParseError, UnknownCell

Edge = tuple[int, int]


def _norm(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=False)
class Topology:
    """Validated, immutable cell graph.

    ``edges`` holds each undirected adjacency pair once as ``(low, high)``;
    ``direct_links`` is a subset of it.  ``communities`` is set only for
    community topologies and ``coordinates`` is an ``(n_cells, 2)`` array
    or None.
    """

    n_cells: int
    edges: tuple[Edge, ...]
    direct_links: frozenset
    coordinates: Optional[np.ndarray] = None
    communities: Optional[tuple[int, ...]] = None
    _adj: tuple = field(init=False, repr=False)

    def __post_init__(self):
        n = self.n_cells
        if n < 1:
            raise MalformedSpec("topology needs at least one cell")
        adj: list[set[int]] = [set() for _ in range(n)]
        for a, b in self.edges:
            if not (0 <= a < n and 0 <= b < n):
                raise MalformedSpec(f"edge ({a}, {b}) references a cell outside [0, {n})")
            if a == b:
                raise MalformedSpec(f"self-loop at cell {a}")
            adj[a].add(b)
            adj[b].add(a)
        edge_set = {_norm(a, b) for a, b in self.edges}
        object.__setattr__(self, "edges", tuple(sorted(edge_set)))
        links = frozenset(_norm(*pair) for pair in self.direct_links)
        if not links <= edge_set:
            raise MalformedSpec(f"direct links {sorted(links - edge_set)} are not adjacency pairs")
        object.__setattr__(self, "direct_links", links)
        if self.coordinates is not None and np.shape(self.coordinates) != (n, 2):
            raise MalformedSpec("coordinates must have shape (n_cells, 2)")
        if self.communities is not None and len(self.communities) != n:
            raise MalformedSpec("one community label per cell required")
        object.__setattr__(self, "_adj", tuple(tuple(sorted(s)) for s in adj))
        if not _connected(self._adj):
            raise DisconnectedGraph(f"cell graph with {n} cells is not connected")

    def _check(self, cell: int) -> None:
        if not (0 <= cell < self.n_cells):
            raise UnknownCell(cell)

    def neighbors(self, cell: int) -> tuple[int, ...]:
        """Adjacency partners of ``cell`` in ascending id order."""
        self._check(cell)
        return self._adj[cell]

    def adjacent(self, a: int, b: int) -> bool:
        self._check(a)
        self._check(b)
        return b in self._adj[a]

    def has_direct_link(self, a: int, b: int) -> bool:
        self._check(a)
        self._check(b)
        return _norm(a, b) in self.direct_links

    def degree(self, cell: int) -> int:
        return len(self.neighbors(cell))


def neighbors(topology: Topology, cell: int) -> tuple[int, ...]:
    return topology.neighbors(cell)


def has_direct_link(topology: Topology, a: int, b: int) -> bool:
    return topology.has_direct_link(a, b)


def _connected(adj: Sequence[Sequence[int]]) -> bool:
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == len(adj)


def _draw_direct(edges: Iterable[Edge], p_x2: float, rng) -> set[Edge]:
    if not 0.0 <= p_x2 <= 1.0:
        raise MalformedSpec(f"p_x2 must lie in [0, 1], got {p_x2}")
    if p_x2 == 1.0:
        return set(edges)
    if p_x2 == 0.0:
        return set()
    if rng is None:
        raise MalformedSpec("a random generator is required when 0 < p_x2 < 1")
    return {e for e in edges if rng.random() < p_x2}


def _grid(width: int, height: int):
    if width < 1 or height < 1:
        raise MalformedSpec("grid dimensions must be positive")
    edges = []
    for y in range(height):
        for x in range(width):
            i = y * width + x
            if x + 1 < width:
                edges.append((i, i + 1))
            if y + 1 < height:
                edges.append((i, i + width))
    coords = np.array([(i % width, i // width) for i in range(width * height)], dtype=float)
    return width * height, edges, coords, None


def _community(n_communities: int, cells_per_community: int, inter_edges: int):
    n, s = n_communities, cells_per_community
    if n < 1 or s < 1 or inter_edges < 0:
        raise MalformedSpec("community sizes must be positive and inter_edges >= 0")
    if inter_edges > s:
        raise MalformedSpec("inter_edges cannot exceed cells_per_community")
    edges = []
    for c in range(n):
        base = c * s
        edges.extend((base + i, base + j) for i in range(s) for j in range(i + 1, s))
    pairs = [] if n == 1 else [(0, 1)] if n == 2 else [(c, (c + 1) % n) for c in range(n)]
    for c, d in pairs:
        for j in range(inter_edges):
            edges.append(_norm(c * s + (s - 1 - j), d * s + j))
    ring = 3.0 * n if n > 1 else 0.0
    coords = np.empty((n * s, 2))
    for c in range(n):
        cx, cy = ring * math.cos(2 * math.pi * c / n), ring * math.sin(2 * math.pi * c / n)
        for j in range(s):
            phi = 2 * math.pi * j / s
            coords[c * s + j] = (cx + math.cos(phi), cy + math.sin(phi))
    labels = tuple(i // s for i in range(n * s))
    return n * s, sorted(set(edges)), coords, labels


def _explicit(n_cells: Optional[int], edges: Iterable[Sequence[int]]):
    out = []
    for e in edges:
        if len(e) != 2:
            raise MalformedSpec(f"edge {e!r} must have exactly two endpoints")
        a, b = int(e[0]), int(e[1])
        if a == b:
            raise MalformedSpec(f"self-loop at cell {a}")
        if a < 0 or b < 0:
            raise MalformedSpec(f"negative cell id in edge {e!r}")
        out.append(_norm(a, b))
    if n_cells is None:
        n_cells = 1 + max((max(e) for e in out), default=0)
    return n_cells, sorted(set(out)), None, None


def build_topology(spec: dict, p_x2: float = 1.0, rng=None) -> Topology:
    """Build and validate a topology from a spec dictionary.

    Each adjacency pair becomes a direct link independently with
    probability ``p_x2``; the draws come from ``rng`` in ascending edge
    order.  Pairs marked explicitly in a topology file are not redrawn.
    """
    kind = spec.get("kind")
    fixed: dict[Edge, bool] = {}
    if kind == "grid":
        n, edges, coords, labels = _grid(int(spec["width"]), int(spec["height"]))
    elif kind == "community":
        n, edges, coords, labels = _community(
            int(spec["n_communities"]), int(spec["cells_per_community"]), int(spec["inter_edges"])
        )
    elif kind == "explicit":
        n, edges, coords, labels = _explicit(spec.get("n_cells"), spec.get("edges", []))
        if spec.get("coordinates") is not None:
            coords = np.asarray(spec["coordinates"], dtype=float)
    elif kind == "file":
        n, edges, fixed = _read_topology_file(spec["path"])
        coords, labels = None, None
    else:
        raise MalformedSpec(f"unknown topology kind {kind!r}")
    edges = sorted(set(edges))
    undecided = [e for e in edges if e not in fixed]
    direct = _draw_direct(undecided, p_x2, rng)
    direct |= {e for e, d in fixed.items() if d}
    return Topology(n, tuple(edges), frozenset(direct), coords, labels)


def grid(width: int, height: int, p_x2: float = 1.0, rng=None) -> Topology:
    return build_topology({"kind": "grid", "width": width, "height": height}, p_x2, rng)


def community(n_communities: int, cells_per_community: int, inter_edges: int,
              p_x2: float = 1.0, rng=None) -> Topology:
    return build_topology(
        {"kind": "community", "n_communities": n_communities,
         "cells_per_community": cells_per_community, "inter_edges": inter_edges},
        p_x2, rng,
    )


def explicit(edges, n_cells: Optional[int] = None, p_x2: float = 1.0, rng=None) -> Topology:
    return build_topology({"kind": "explicit", "n_cells": n_cells, "edges": edges}, p_x2, rng)


def from_adjacency_matrix(matrix, direct=None) -> Topology:
    """Topology from a dense 0/1 adjacency matrix (must be symmetric)."""
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise MalformedSpec("adjacency matrix must be square")
    if np.any(np.diag(m)):
        raise MalformedSpec("self-loop on the diagonal")
    if not np.array_equal(m != 0, (m != 0).T):
        raise MalformedSpec("asymmetric adjacency matrix")
    i, j = np.nonzero(np.triu(m))
    edges = tuple(zip(i.tolist(), j.tolist()))
    links = frozenset(edges if direct is None else (_norm(*e) for e in direct))
    return Topology(m.shape[0], edges, links)


def _read_topology_file(path) -> tuple[int, list[Edge], dict[Edge, bool]]:
    n_cells = None
    edges: dict[Edge, bool | None] = {}
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if n_cells is None:
                if len(parts) != 2 or parts[0] != "cells":
                    raise ParseError(lineno, "expected header 'cells N'")
                n_cells = int(parts[1])
                continue
            if len(parts) not in (2, 3):
                raise ParseError(lineno, "expected 'a b [direct|s1only]'")
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(lineno, "cell ids must be integers") from None
            if a == b:
                raise MalformedSpec(f"line {lineno}: self-loop at cell {a}")
            if not (0 <= a < n_cells and 0 <= b < n_cells):
                raise MalformedSpec(f"line {lineno}: cell id outside [0, {n_cells})")
            marker = parts[2] if len(parts) == 3 else None
            if marker not in (None, "direct", "s1only"):
                raise ParseError(lineno, f"unknown link marker {marker!r}")
            edges[_norm(a, b)] = None if marker is None else marker == "direct"
    if n_cells is None:
        raise ParseError(1, "missing 'cells N' header")
    fixed = {e: d for e, d in edges.items() if d is not None}
    return n_cells, sorted(edges), fixed


def load_topology(path, p_x2: float = 1.0, rng=None) -> Topology:
    return build_topology({"kind": "file", "path": str(path)}, p_x2, rng)


def save_topology(topology: Topology, path) -> None:
    """Write ``topology`` in the ``cells N`` / ``a b marker`` text format."""
    lines = [f"cells {topology.n_cells}"]
    for a, b in topology.edges:
        marker = "direct" if (a, b) in topology.direct_links else "s1only"
        lines.append(f"{a} {b} {marker}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
