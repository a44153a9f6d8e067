"""Test multi-depot edge assembly crossover."""

from collections import Counter

import numpy as np
import pytest

from hgamp.crossover import (
    LABEL_A,
    LABEL_B,
    Intermediate,
    JointGraph,
    apply_eset,
    decompose,
    eliminate_subtours,
    extend_with_dummy_loops,
    group_esets,
    mdeax,
    partition_ab_cycles,
    solution_edges,
    split_mega_tours,
)
from hgamp.exceptions import HgampError, InternalInvariantError
from hgamp.generate import gen_tiny
from hgamp.localsearch import build_neighbor_lists
from hgamp.model import Solution, broken_pairs_distance, total_cost
from hgamp.test.helpers import random_solution, two_clusters


def _parents(seed):
    inst = gen_tiny(8, 3, seed)
    rng = np.random.default_rng(seed)
    return inst, rng, random_solution(inst, rng), random_solution(inst, rng)


def test_dummy_loops_balance_depots(line):
    a = Solution.from_sequences(line, [(0, [2]), (0, [3]), (1, [4])])
    b = Solution.from_sequences(line, [(0, [2, 3, 4])])

    edges_a, edges_b = extend_with_dummy_loops(a, b)

    # a has one more route at depot 0 and the only route at depot 1
    assert edges_b[(0, 0)] == 1
    assert edges_b[(1, 1)] == 1
    assert edges_a == solution_edges(a)


@pytest.mark.parametrize("seed", range(5))
def test_joint_graph_is_balanced(seed):
    _inst, _rng, a, b = _parents(seed)
    edges_a, edges_b = extend_with_dummy_loops(a, b)

    joint = JointGraph.build(edges_a, edges_b)

    labels = Counter(label for _u, _v, label in joint.edges)
    assert labels[LABEL_A] == labels[LABEL_B]


def test_joint_graph_rejects_unbalanced():
    joint = JointGraph([(0, 2, LABEL_A), (2, 3, LABEL_B)])

    with pytest.raises(InternalInvariantError):
        joint.check()


@pytest.mark.parametrize("seed", range(5))
def test_ab_cycles_partition_joint_graph(seed):
    _inst, rng, a, b = _parents(seed)
    joint = JointGraph.build(*extend_with_dummy_loops(a, b))

    cycles = partition_ab_cycles(joint, rng)

    assert Counter(e for cycle in cycles for e in cycle) == Counter(joint.edges)
    for cycle in cycles:
        assert len(cycle) % 2 == 0
        labels = [label for _u, _v, label in cycle]
        assert all(labels[k] != labels[k + 1] for k in range(len(labels) - 1))


@pytest.mark.parametrize("beta", [1, 2, 30])
def test_group_esets(beta):
    _inst, rng, a, b = _parents(3)
    joint = JointGraph.build(*extend_with_dummy_loops(a, b))
    cycles = partition_ab_cycles(joint, rng)

    esets = group_esets(cycles, beta, rng)

    assert 1 <= len(esets) <= beta
    assert Counter(e for eset in esets for e in eset) == Counter(joint.edges)


def test_group_esets_ignores_depots():
    # six cycles, all through depot 0 or 1, pairwise linked by one customer
    cycles = [
        ((0, 2, LABEL_A), (2, 3, LABEL_B), (3, 4, LABEL_A), (4, 0, LABEL_B)),
        ((0, 5, LABEL_A), (5, 4, LABEL_B), (4, 6, LABEL_A), (6, 0, LABEL_B)),
        ((1, 7, LABEL_A), (7, 8, LABEL_B), (8, 9, LABEL_A), (9, 1, LABEL_B)),
        ((1, 10, LABEL_A), (10, 9, LABEL_B), (9, 11, LABEL_A), (11, 1, LABEL_B)),
        ((0, 12, LABEL_A), (12, 1, LABEL_B), (1, 13, LABEL_A), (13, 0, LABEL_B)),
        ((1, 14, LABEL_A), (14, 13, LABEL_B), (13, 15, LABEL_A), (15, 1, LABEL_B)),
    ]

    esets = group_esets(cycles, 10, np.random.default_rng(0), depots=(0, 1))

    assert esets == [
        [*cycles[0], *cycles[1]],
        [*cycles[2], *cycles[3]],
        [*cycles[4], *cycles[5]],
    ]
    # with depots shared every cycle joins one group, which falls back to single cycles
    assert len(group_esets(cycles, 10, np.random.default_rng(0))) == 6


def test_group_esets_splits_single_group():
    cycles = [
        ((0, 2, LABEL_A), (2, 3, LABEL_B), (3, 4, LABEL_A), (4, 0, LABEL_B)),
        ((0, 3, LABEL_A), (3, 5, LABEL_B), (5, 6, LABEL_A), (6, 0, LABEL_B)),
    ]

    esets = group_esets(cycles, 10, np.random.default_rng(0), depots=(0,))

    assert esets == [list(cycles[0]), list(cycles[1])]
    assert group_esets(cycles, 1, np.random.default_rng(0), depots=(0,)) == [
        [*cycles[0], *cycles[1]]
    ]


def test_apply_eset_swaps_edges():
    base = Counter({(0, 2): 1, (2, 3): 1, (0, 3): 1})
    eset = [(2, 3, LABEL_A), (2, 4, LABEL_B), (0, 0, LABEL_B)]

    result = apply_eset(base, eset)

    assert result == Counter({(0, 2): 1, (0, 3): 1, (2, 4): 1})


def test_decompose_and_split_mega_tour(line):
    # depot 0 -> 2 -> depot 1 -> 3 -> depot 0 plus a plain route at depot 1
    edges = Counter({(0, 2): 1, (1, 2): 1, (1, 3): 1, (0, 3): 1, (1, 4): 2})

    intermediate = decompose(edges, line)

    assert intermediate.routes == [(1, [4])]
    assert intermediate.trails == [[(0, [2], 1), (1, [3], 0)]]
    assert intermediate.subtours == []

    # both depots could serve everything, so depot 1 goes for the larger saving
    split_mega_tours(intermediate, line)

    assert intermediate.trails == []
    assert intermediate.routes == [(1, [4]), (0, [2, 3])]


def test_decompose_finds_subtours(line):
    edges = Counter({(0, 4): 2, (2, 3): 2})

    intermediate = decompose(edges, line)

    assert intermediate.routes == [(0, [4])]
    assert intermediate.subtours == [[2, 3]]


def test_decompose_rejects_degree(line):
    with pytest.raises(InternalInvariantError):
        decompose(Counter({(0, 2): 2, (0, 3): 1}), line)


def test_eliminate_subtours_splices_into_route():
    inst = two_clusters()
    lists = build_neighbor_lists(inst, 2)
    intermediate = Intermediate(routes=[(0, [2, 3]), (1, [4])], subtours=[[5]])

    solution = eliminate_subtours(intermediate, lists, inst)

    assert solution.sequences() == [(0, [2, 3]), (1, [5, 4])]
    assert solution.cost == total_cost(solution, inst)


def test_eliminate_subtours_without_routes(line, line_lists):
    intermediate = Intermediate(subtours=[[2, 3]])

    solution = eliminate_subtours(intermediate, line_lists, line)

    # depot 1 is cheaper to open even though it is farther away
    assert solution.sequences() == [(1, [3, 2])]


@pytest.mark.parametrize("seed", range(6))
def test_offspring_visit_every_customer_once(seed):
    inst, rng, a, b = _parents(seed)
    lists = build_neighbor_lists(inst, 4)

    offspring = mdeax(a, b, 5, rng, inst, lists)

    assert len(offspring) <= 5
    for child in offspring:
        assert child.visits() == Counter(inst.customer_vertices)
        assert all(route.customers for route in child.routes)
        assert child.cost == total_cost(child, inst)


@pytest.mark.parametrize("seed", range(5))
def test_offspring_differ_from_both_parents(seed):
    inst = gen_tiny(40, 5, seed)
    rng = np.random.default_rng(seed)
    lists = build_neighbor_lists(inst, 8)

    produced = 0
    for _ in range(10):
        a, b = random_solution(inst, rng), random_solution(inst, rng)
        for child in mdeax(a, b, 10, rng, inst, lists):
            produced += 1
            assert broken_pairs_distance(child, a) > 0
            assert broken_pairs_distance(child, b) > 0

    assert produced > 0


def test_identical_parents_give_no_offspring():
    inst, rng, a, _b = _parents(0)

    assert mdeax(a, a.copy(), 5, rng, inst, build_neighbor_lists(inst, 4)) == []


def test_mdeax_rejects_foreign_parents(line, line_lists):
    other = gen_tiny(3, 2, 0)
    a = Solution.from_sequences(line, [(0, [2, 3]), (1, [4])])
    b = Solution.from_sequences(other, [(0, [2, 3, 4])])

    with pytest.raises(HgampError):
        mdeax(a, b, 3, np.random.default_rng(0), line, line_lists)
