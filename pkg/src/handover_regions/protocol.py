"""Abstract signaling records the algorithm reads its inputs from.

Only the fields the self-organization needs are modeled: the UE history
carried by a HandoverRequest, and the old GUTI (whose GUMMEI names the
allocating MME/AMF) carried by the TAU Request that follows an
inter-region handover.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Collection, Iterable, NamedTuple, Union

from .assignment import AssignmentState
from .errors import ConfigError, RetiredRegion
from .topology import Topology

H_LEN = 16
M_TMSI_BITS = 32


class HandoverClass(str, Enum):
    X2 = "X2"
    S1_INTRA = "S1IntraRegion"
    S1_INTER = "S1InterRegion"

    @property
    def inter_region(self) -> bool:
        return self is HandoverClass.S1_INTER


@dataclass(frozen=True, slots=True)
class UeHistory:
    """Last visited cells, most recent first."""

    visited: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.visited) > H_LEN:
            raise ValueError(f"UE history longer than {H_LEN}")

    def push(self, cell: int) -> "UeHistory":
        return UeHistory(((cell,) + self.visited)[:H_LEN])


@dataclass(frozen=True, slots=True)
class Guti:
    gummei: int
    m_tmsi: int

    def to_int(self) -> int:
        return (self.gummei << M_TMSI_BITS) | self.m_tmsi

    @classmethod
    def from_int(cls, value: int) -> "Guti":
        return cls(value >> M_TMSI_BITS, value & ((1 << M_TMSI_BITS) - 1))


def encode_guti(region: int, m_tmsi: int) -> Guti:
    if region < 0 or not 0 <= m_tmsi < (1 << M_TMSI_BITS):
        raise ValueError("region must be >= 0 and m_tmsi a 32-bit unsigned value")
    return Guti(region, m_tmsi)


def decode_guti(guti: Guti) -> tuple[int, int]:
    return guti.gummei, guti.m_tmsi


@dataclass(frozen=True, slots=True)
class HandoverRequestMsg:
    ue: int
    source_cell: int
    target_cell: int
    history: UeHistory

    def __post_init__(self):
        if not self.history.visited or self.history.visited[0] != self.source_cell:
            raise ValueError("UE history must start with the source cell")


@dataclass(frozen=True, slots=True)
class TauRequestMsg:
    ue: int
    old_guti: Guti
    cell: int


@dataclass(frozen=True)
class SignalingCostModel:
    """Messages per procedure.

    ``msgs_assignment_change`` is charged once per assignment exchange
    (request plus response, or reassignment order plus acknowledgement).
    """

    msgs_x2: int = 8
    msgs_s1_intra: int = 12
    msgs_s1_inter: int = 18
    msgs_assignment_change: int = 2

    def __post_init__(self):
        for name in ("msgs_x2", "msgs_s1_intra", "msgs_s1_inter", "msgs_assignment_change"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or value <= 0:
                raise ConfigError(f"cost_model.{name} must be positive, got {value!r}")

    def cost(self, hclass: HandoverClass):
        if hclass is HandoverClass.X2:
            return self.msgs_x2
        if hclass is HandoverClass.S1_INTRA:
            return self.msgs_s1_intra
        return self.msgs_s1_inter


def signaling_cost(hclass: HandoverClass, model: SignalingCostModel = SignalingCostModel()):
    return model.cost(hclass)


def classify_handover(source: int, target: int, assignment: AssignmentState,
                      topology: Topology) -> HandoverClass:
    """Inter-region when the primaries differ, else X2 iff a direct link exists."""
    if assignment.primary(source) != assignment.primary(target):
        return HandoverClass.S1_INTER
    if topology.has_direct_link(source, target):
        return HandoverClass.X2
    return HandoverClass.S1_INTRA


def derive_source_region(msg: Union[HandoverRequestMsg, TauRequestMsg],
                         assignment: AssignmentState,
                         live: Collection[int]) -> int:
    """Region a handover came from, as the target cell can tell it.

    A HandoverRequest is only conclusive for intra-region handovers, where
    source and target share the target's primary region.  A TAU Request
    names the source through the GUMMEI of its old GUTI.
    """
    if isinstance(msg, TauRequestMsg):
        region = msg.old_guti.gummei
        if region not in live:
            raise RetiredRegion(region)
        return region
    return assignment.primary(msg.target_cell)


MESSAGE_KINDS = ("HO_REQ", "TAU_REQ", "ASSIGN_REQ", "ASSIGN_RSP", "REASSIGN_REQ")
MESSAGE_LOG_HEADER = ("time", "kind", "ue", "source", "target",
                      "source_region", "target_region", "class")


class MessageRecord(NamedTuple):
    """One row of the message log.

    For assignment traffic ``source``/``target`` hold the cell and
    ``source_region``/``target_region`` the old and addressed region; the
    ``hclass`` field then carries the MME verdict or is empty.
    """

    time: int
    kind: str
    ue: int
    source: int
    target: int
    source_region: int
    target_region: int
    hclass: str


def write_message_log(records: Iterable[MessageRecord], path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MESSAGE_LOG_HEADER)
        writer.writerows(records)
