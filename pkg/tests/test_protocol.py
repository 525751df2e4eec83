import itertools

import pytest
from hypothesis import given, strategies as st

from handover_regions.assignment import AssignmentState
from handover_regions.errors import ConfigError, RetiredRegion, UnassignedCell
from handover_regions.protocol import (H_LEN, Guti, HandoverClass, HandoverRequestMsg,
                                       SignalingCostModel, TauRequestMsg, UeHistory,
                                       classify_handover, decode_guti, derive_source_region,
                                       encode_guti, signaling_cost)
from handover_regions.topology import Topology

X2, INTRA, INTER = HandoverClass.X2, HandoverClass.S1_INTRA, HandoverClass.S1_INTER


def test_classify_examples():
    t = Topology(3, ((0, 1), (1, 2)), frozenset({(0, 1)}))
    a = AssignmentState([(0,), (0,), (0,)])
    assert classify_handover(0, 1, a, t) is X2
    assert classify_handover(1, 2, a, t) is INTRA
    a.set(2, (1,))
    assert classify_handover(1, 2, a, t) is INTER
    assert classify_handover(2, 1, a, t) is INTER


def test_classify_exhaustive_three_cells_two_regions():
    # triangle, every subset of direct links, every assignment
    edges = ((0, 1), (0, 2), (1, 2))
    seen = set()
    for mask in range(8):
        links = frozenset(e for i, e in enumerate(edges) if mask >> i & 1)
        t = Topology(3, edges, links)
        for labels in itertools.product((0, 1), repeat=3):
            a = AssignmentState([(r,) for r in labels])
            for s, d in itertools.permutations(range(3), 2):
                got = classify_handover(s, d, a, t)
                if labels[s] != labels[d]:
                    want = INTER
                elif (min(s, d), max(s, d)) in links:
                    want = X2
                else:
                    want = INTRA
                assert got is want
                seen.add(got)
    assert seen == {X2, INTRA, INTER}


def test_classify_unassigned():
    t = Topology(2, ((0, 1),), frozenset())
    with pytest.raises(UnassignedCell):
        classify_handover(0, 1, AssignmentState([(0,), ()]), t)


def test_primary_is_first_member_for_k2():
    t = Topology(2, ((0, 1),), frozenset({(0, 1)}))
    a = AssignmentState([(0, 1), (1, 0)])
    assert classify_handover(0, 1, a, t) is INTER


def test_derive_source_region():
    a = AssignmentState([(2,), (2,), (0,)])
    msg = HandoverRequestMsg(ue=1, source_cell=0, target_cell=1, history=UeHistory((0,)))
    assert derive_source_region(msg, a, {0, 2}) == 2
    tau = TauRequestMsg(ue=1, old_guti=Guti(5, 17), cell=2)
    assert derive_source_region(tau, a, {0, 5}) == 5
    with pytest.raises(RetiredRegion):
        derive_source_region(tau, a, {0, 2})


def test_history_must_start_at_source():
    with pytest.raises(ValueError):
        HandoverRequestMsg(0, 3, 4, UeHistory((4, 3)))


def test_history_is_bounded():
    h = UeHistory()
    for c in range(40):
        h = h.push(c)
    assert len(h.visited) == H_LEN and h.visited[0] == 39


def test_guti_examples():
    assert decode_guti(encode_guti(5, 99)) == (5, 99)
    assert decode_guti(encode_guti(0, 0)) == (0, 0)
    assert encode_guti(1, 7).gummei != encode_guti(2, 7).gummei


@given(st.integers(0, 2**20), st.integers(0, 2**32 - 1))
def test_guti_roundtrip(region, tmsi):
    g = encode_guti(region, tmsi)
    assert decode_guti(g) == (region, tmsi)
    assert Guti.from_int(g.to_int()) == g


@given(st.integers(0, 1000), st.integers(0, 1000), st.integers(0, 2**32 - 1))
def test_guti_injective(r1, r2, tmsi):
    if r1 != r2:
        assert encode_guti(r1, tmsi).to_int() != encode_guti(r2, tmsi).to_int()


def test_signaling_cost():
    assert signaling_cost(INTER) == 1.5 * signaling_cost(INTRA)
    assert signaling_cost(X2, SignalingCostModel(msgs_x2=8)) == 8
    assert signaling_cost(X2) <= signaling_cost(INTRA) <= signaling_cost(INTER)
    assert SignalingCostModel(msgs_x2=3).cost(X2) == 3
    with pytest.raises(ConfigError):
        SignalingCostModel(msgs_s1_inter=0)
