"""Cell to region association shared by the engine and the protocol layer."""
from __future__ import annotations

from typing import Iterable, Sequence

from .errors import UnassignedCell, UnknownCell


class AssignmentState:
    """Ordered region membership per cell; the first member is the primary.

    The engine owns one instance and mutates it in place, so lookups stay
    O(1) per handover.
    """

    __slots__ = ("_regions",)

    def __init__(self, regions: Iterable[Sequence[int]]):
        self._regions = [tuple(r) for r in regions]

    @property
    def n_cells(self) -> int:
        return len(self._regions)

    def regions(self, cell: int) -> tuple[int, ...]:
        try:
            return self._regions[cell]
        except IndexError:
            raise UnknownCell(cell) from None

    def primary(self, cell: int) -> int:
        regions = self.regions(cell)
        if not regions:
            raise UnassignedCell(f"cell {cell} has no region")
        return regions[0]

    def set(self, cell: int, regions: Sequence[int]) -> None:
        self.regions(cell)
        self._regions[cell] = tuple(regions)

    def snapshot(self) -> tuple[tuple[int, ...], ...]:
        return tuple(self._regions)

    def primaries(self) -> tuple[int, ...]:
        return tuple(r[0] if r else -1 for r in self._regions)

    def cells_of(self, region: int) -> list[int]:
        return [c for c, r in enumerate(self._regions) if region in r]

    def counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for regions in self._regions:
            for r in regions:
                out[r] = out.get(r, 0) + 1
        return out

    def copy(self) -> "AssignmentState":
        return AssignmentState(self._regions)

    def __eq__(self, other):
        return isinstance(other, AssignmentState) and self._regions == other._regions

    def __repr__(self):
        return f"AssignmentState({self._regions!r})"
