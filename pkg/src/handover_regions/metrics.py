"""Per-window metrics, fairness and convergence measures."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

from .errors import NotConverged
from .protocol import HandoverClass, MessageRecord, SignalingCostModel

METRICS_HEADER = ("window", "x2", "s1_intra", "s1_inter", "ratio", "signaling",
                  "assignment_changes", "jain", "max_load")
ASSIGNMENT_EXCHANGE_KINDS = ("ASSIGN_REQ", "REASSIGN_REQ")


class AssignmentChange(NamedTuple):
    """A cell's region set after a change.

    ``phase`` 0 marks changes made before the handover at ``time`` is
    processed (scale events), 1 those made while processing it.
    """

    time: int
    phase: int
    cell: int
    regions: tuple
    reason: str


@dataclass
class AssignmentTimeline:
    initial: tuple
    capacities: dict
    changes: list = field(default_factory=list)
    # (time, "scale_up" | "scale_down", region)
    scale_log: list = field(default_factory=list)
    # per window: {region: load} at the window's end, as the regions saw it
    load_snapshots: Optional[list] = None


@dataclass(frozen=True)
class WindowMetrics:
    window: int
    x2: int
    s1_intra: int
    s1_inter: int
    ratio: float
    signaling: float
    assignment_changes: int
    loads: dict
    jain: float

    @property
    def max_load(self) -> float:
        return max(self.loads.values(), default=0.0)

    def row(self) -> tuple:
        return (self.window, self.x2, self.s1_intra, self.s1_inter, _fmt(self.ratio),
                _fmt(self.signaling), self.assignment_changes, _fmt(self.jain),
                _fmt(self.max_load))


def _fmt(x: float) -> str:
    if float(x).is_integer():
        return str(int(x))
    return f"{x:.6f}"


def jain_index(loads: Sequence[float]) -> float:
    """(sum x)^2 / (n sum x^2); 1.0 for equal (or all-zero) loads."""
    loads = [float(x) for x in loads]
    if not loads:
        return 1.0
    sq = math.fsum(x * x for x in loads)
    if sq == 0.0:
        return 1.0
    return math.fsum(loads) ** 2 / (len(loads) * sq)


def _replayed_loads(timeline: AssignmentTimeline, n_windows: int, window: int,
                    n_events: int) -> list[dict]:
    """Cell counts per live region at each window end (uniform cell load)."""
    regions = [tuple(r) for r in timeline.initial]
    live = set(timeline.capacities)
    changes = sorted(timeline.changes, key=lambda c: (c.time, c.phase))
    scales = sorted(timeline.scale_log)
    out = []
    ci = si = 0
    for w in range(n_windows):
        end = min((w + 1) * window, n_events) - 1
        if w == n_windows - 1:
            end = math.inf
        while si < len(scales) and scales[si][0] <= end:
            _, action, region = scales[si]
            (live.add if action == "scale_up" else live.discard)(region)
            si += 1
        while ci < len(changes) and changes[ci].time <= end:
            regions[changes[ci].cell] = tuple(changes[ci].regions)
            ci += 1
        loads = {r: 0.0 for r in sorted(live)}
        for rs in regions:
            for r in rs:
                if r in loads:
                    loads[r] += 1.0
        out.append(loads)
    return out


def compute_window_metrics(log: Iterable[MessageRecord], timeline: AssignmentTimeline,
                           window: int, cost_model: SignalingCostModel,
                           n_events: int) -> list[WindowMetrics]:
    """Bucket the message log into consecutive windows of ``window`` handovers.

    Loads come from ``timeline.load_snapshots`` when present, otherwise from
    replaying the assignment changes with unit cell load.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    n_windows = math.ceil(n_events / window)
    if n_windows == 0:
        return []
    last = n_windows - 1
    counts = [[0, 0, 0] for _ in range(n_windows)]
    exchanges = [0] * n_windows
    for rec in log:
        w = min(rec.time // window, last)
        if rec.kind == "HO_REQ":
            if rec.hclass == HandoverClass.X2.value:
                counts[w][0] += 1
            elif rec.hclass == HandoverClass.S1_INTRA.value:
                counts[w][1] += 1
            else:
                counts[w][2] += 1
        elif rec.kind in ASSIGNMENT_EXCHANGE_KINDS:
            exchanges[w] += 1
    changes = [0] * n_windows
    for ch in timeline.changes:
        changes[min(ch.time // window, last)] += 1
    loads = timeline.load_snapshots
    if loads is None:
        loads = _replayed_loads(timeline, n_windows, window, n_events)
    out = []
    for w in range(n_windows):
        x2, intra, inter = counts[w]
        total = x2 + intra + inter
        signaling = (x2 * cost_model.msgs_x2 + intra * cost_model.msgs_s1_intra
                     + inter * cost_model.msgs_s1_inter
                     + exchanges[w] * cost_model.msgs_assignment_change)
        out.append(WindowMetrics(
            window=w, x2=x2, s1_intra=intra, s1_inter=inter,
            ratio=inter / total if total else 0.0,
            signaling=signaling, assignment_changes=changes[w],
            loads=dict(loads[w]), jain=jain_index(list(loads[w].values())),
        ))
    return out


def steady_state_ratio(metrics: Sequence[WindowMetrics], fraction: float = 0.25) -> float:
    """Mean inter-region ratio over the last ``fraction`` of windows."""
    if not metrics:
        return 0.0
    tail = metrics[-max(1, math.ceil(fraction * len(metrics))):]
    return math.fsum(m.ratio for m in tail) / len(tail)


def convergence_time(series: Sequence[float], tol: float) -> int:
    """First window after which the series never exceeds the mean of its
    final 10% plus ``tol``."""
    if not series:
        raise ValueError("empty series")
    tail = series[-max(1, math.ceil(0.1 * len(series))):]
    bound = math.fsum(tail) / len(tail) + tol
    w = len(series)
    while w > 0 and series[w - 1] <= bound:
        w -= 1
    if w == len(series):
        raise NotConverged(f"last window {series[-1]:.4f} exceeds {bound:.4f}")
    return w


def write_metrics_csv(metrics: Iterable[WindowMetrics], path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for m in metrics:
            writer.writerow(m.row())
