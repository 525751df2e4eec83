import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from handover_regions.errors import Infeasible, InsufficientCapacity, TooLarge
from handover_regions.partition import (Partition, branch_and_bound_partition, cut_value,
                                        exhaustive_partition, oracle_partition,
                                        random_partition, static_partition)
from handover_regions.topology import community, explicit, grid

PATH_FLOW = np.array([[0, 5, 0, 0],
                      [5, 0, 1, 0],
                      [0, 1, 0, 5],
                      [0, 0, 5, 0]], dtype=float)


def brute_force(flow, n_regions, cap):
    """Plain-Python reference: first minimum in lexicographic label order."""
    n = len(flow)
    best = None
    for labels in itertools.product(range(n_regions), repeat=n):
        if any(labels.count(r) > cap for r in range(n_regions)):
            continue
        cut = sum(flow[i][j] for i in range(n) for j in range(n) if labels[i] != labels[j])
        if best is None or cut < best[1]:
            best = (labels, cut)
    return best


def test_oracle_path_fixture():
    for mode in ("exhaustive", "branch_and_bound", "auto"):
        p, cut = oracle_partition(PATH_FLOW, 2, 2, mode)
        assert p.region_of == (0, 0, 1, 1) and cut == 2


def test_oracle_zero_flow_is_canonical():
    p, cut = oracle_partition(np.zeros((4, 4)), 2, 2)
    assert p.region_of == (0, 0, 1, 1) and cut == 0
    p, cut = oracle_partition(np.zeros((4, 4)), 3, 4, "branch_and_bound")
    assert p.region_of == (0, 0, 0, 0)


def test_oracle_guards():
    with pytest.raises(TooLarge):
        oracle_partition(np.zeros((17, 17)), 2, 9, "exhaustive")
    with pytest.raises(TooLarge):
        oracle_partition(np.zeros((41, 41)), 2, 21, "branch_and_bound")
    with pytest.raises(Infeasible):
        oracle_partition(PATH_FLOW, 2, 1)
    with pytest.raises(ValueError):
        oracle_partition(PATH_FLOW, 2, 2, "metis")


def test_oracle_matches_brute_force_on_fixtures():
    rng = np.random.default_rng(11)
    for _ in range(15):
        n = int(rng.integers(2, 7))
        flow = rng.integers(0, 4, size=(n, n)).astype(float)
        np.fill_diagonal(flow, 0)
        k = int(rng.integers(2, 4))
        cap = int(rng.integers(-(-n // k), n + 1))
        labels, cut = brute_force(flow.tolist(), k, cap)
        for solver in (exhaustive_partition, branch_and_bound_partition):
            p, c = solver(flow, k, cap)
            assert c == cut and p.region_of == labels


def test_exhaustive_chunking_does_not_change_result():
    rng = np.random.default_rng(5)
    flow = rng.integers(0, 3, size=(7, 7)).astype(float)
    assert exhaustive_partition(flow, 3, 3, chunk=17) == exhaustive_partition(flow, 3, 3)


def test_branch_and_bound_handles_community_size():
    t = community(2, 12, 2)
    flow = np.zeros((24, 24))
    for a, b in t.edges:
        same = t.communities[a] == t.communities[b]
        flow[a, b] = flow[b, a] = 10 if same else 1
    p, cut = branch_and_bound_partition(flow, 2, 12)
    assert p.region_of == t.communities and cut == 4


def test_cut_value_examples():
    flow = np.array([[0, 2], [1, 0]], dtype=float)
    assert cut_value(flow, [0, 0]) == 0
    assert cut_value(flow, Partition((0, 1))) == 3
    with pytest.raises(ValueError):
        cut_value(flow, [0, 1, 1])


@given(st.integers(2, 7), st.integers(0, 2**31))
def test_cut_non_increasing_when_merging(n, seed):
    rng = np.random.default_rng(seed)
    flow = rng.integers(0, 5, size=(n, n)).astype(float)
    labels = rng.integers(0, 3, size=n)
    merged = np.where(labels == 2, 1, labels)
    assert cut_value(flow, merged) <= cut_value(flow, labels)


@given(st.integers(2, 6), st.integers(2, 3), st.integers(0, 2**31))
def test_exhaustive_returns_a_minimum(n, k, seed):
    rng = np.random.default_rng(seed)
    flow = rng.integers(0, 4, size=(n, n)).astype(float)
    cap = -(-n // k)
    p, cut = exhaustive_partition(flow, k, cap)
    assert cut == cut_value(flow, p)
    assert max(p.sizes().values()) <= cap
    for labels in itertools.product(range(k), repeat=n):
        if all(labels.count(r) <= cap for r in range(k)):
            assert cut <= cut_value(flow, labels)


def test_static_examples():
    path = explicit([(0, 1), (1, 2), (2, 3)])
    assert static_partition(path, 2, 2).region_of == (0, 0, 1, 1)
    assert static_partition(grid(3, 3), 1, 9).region_of == (0,) * 9
    assert sorted(static_partition(grid(2, 2), 4, 1).region_of) == [0, 1, 2, 3]
    with pytest.raises(InsufficientCapacity):
        static_partition(path, 2, 1)


def test_static_on_community_recovers_communities():
    t = community(2, 12, 2)
    assert static_partition(t, 2, 12).region_of == t.communities


def test_random_partition():
    t = grid(5, 5)
    p = random_partition(t, 3, 25, np.random.default_rng(4))
    sizes = sorted(p.sizes().values())
    assert sizes[-1] - sizes[0] <= 1
    assert p == random_partition(t, 3, 25, np.random.default_rng(4))
    tight = random_partition(t, 2, 13, np.random.default_rng(4))
    assert max(tight.sizes().values()) <= 13
    with pytest.raises(InsufficientCapacity):
        random_partition(t, 2, 12, np.random.default_rng(4))


def test_partition_helpers():
    p = Partition((2, 2, 0, 1))
    assert p.blocks() == {0: [2], 1: [3], 2: [0, 1]}
    assert p.canonical() == (0, 0, 1, 2)
