"""Test subpopulation management."""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from hgamp.construct import CrhParams, build_configurations, mst_estimate
from hgamp.engine import RunParams
from hgamp.exceptions import HgampError, InternalInvariantError
from hgamp.localsearch import build_neighbor_lists
from hgamp.model import DepotConfiguration, Solution, broken_pairs_distance
from hgamp.population import (
    Population,
    Subpopulation,
    adq_select,
    biased_fitness,
    halve_subpops,
    init_population,
    insert_offspring,
    replace_worst_config,
    restart_if_stagnant,
    select_parents,
)
from hgamp.test.helpers import roomy

SMALL = RunParams(mu=3, lam=2, eta=5, crh=CrhParams(h_max=20, i_max=20, n_t=2, gamma=3))


def _line_solutions(line):
    return {
        # depots {0,1}, 166
        "a": Solution.from_sequences(line, [(0, [2, 3]), (1, [4])]),
        # depots {0,1}, 178
        "b": Solution.from_sequences(line, [(0, [2]), (1, [3, 4])]),
        # same edges as a, walked backwards
        "a_reversed": Solution.from_sequences(line, [(0, [3, 2]), (1, [4])]),
        # depots {1}, 73
        "d": Solution.from_sequences(line, [(1, [2, 3, 4])]),
        # depots {0,1}, 173
        "e": Solution.from_sequences(line, [(0, [2]), (0, [3]), (1, [4])]),
    }


def test_average(line):
    subpop = Subpopulation()
    assert subpop.average == math.inf

    sols = _line_solutions(line)
    subpop.members.extend([sols["a"], sols["b"]])
    assert subpop.average == (166 + 178) / 2
    assert subpop.best() is sols["a"]


def test_adq_select_drops_clones_first(line):
    sols = _line_solutions(line)
    subpop = Subpopulation()
    subpop.members.extend(sols[k] for k in ("a", "b", "a_reversed", "d", "e"))

    adq_select(subpop, mu=4, lam=1)

    assert len(subpop) == 4
    assert sols["d"] in subpop.members
    assert sum(broken_pairs_distance(m, sols["a"]) == 0 for m in subpop.members) == 1


def test_adq_select_keeps_best(line):
    sols = _line_solutions(line)
    subpop = Subpopulation()
    subpop.members.extend(sols[k] for k in ("a", "b", "d", "e"))

    adq_select(subpop, mu=1, lam=3)

    assert subpop.members == [sols["d"]]


def test_adq_select_needs_full_subpop(line):
    subpop = Subpopulation()
    subpop.members.append(_line_solutions(line)["a"])

    with pytest.raises(InternalInvariantError):
        adq_select(subpop, mu=2, lam=2)


def test_biased_fitness_ranks_cost(line):
    sols = _line_solutions(line)
    subpop = Subpopulation()
    subpop.members.extend(sols[k] for k in ("a", "b", "d"))

    fitness = biased_fitness(subpop, n_close=2, n_elite=3)

    # with every member elite only the cost rank counts
    assert fitness == [1, 2, 0]


class LineSubpop(Subpopulation):
    """Members stand on a line; their distance is the gap between positions."""

    def __init__(self, members):
        super().__init__()
        self.members.extend(members)
        self.removed = []

    def distance(self, a, b):
        return abs(a.pos - b.pos)

    def remove(self, index):
        self.removed.append(self.members[index].label)
        super().remove(index)


def _line_members():
    positions = [0, 2, 5, 9, 14, 20, 27, 35, 44, 54, 65, 77]
    costs = [10, 95, 20, 90, 30, 85, 40, 80, 50, 75, 60, 78]
    return [
        SimpleNamespace(label=k, pos=p, cost=c) for k, (p, c) in enumerate(zip(positions, costs))
    ]


def test_biased_fitness_twelve_members():
    subpop = LineSubpop(_line_members())

    fitness = biased_fitness(subpop, n_close=1, n_elite=3)

    # cost rank plus 0.75 times the rank by distance to the nearest member
    assert fitness == pytest.approx(
        [7.5, 19.25, 7.75, 16, 7.25, 13.5, 6.75, 11, 6.25, 7.5, 5.75, 7]
    )


def test_adq_select_twelve_members():
    subpop = LineSubpop(_line_members())

    adq_select(subpop, mu=6, lam=6, n_close=1, n_elite=3)

    # cost alone would remove 11 (78) before 9 (75)
    assert subpop.removed == [1, 3, 5, 7, 9, 11]
    assert [m.label for m in subpop.members] == [0, 2, 4, 6, 8, 10]


def test_insert_offspring(line):
    sols = _line_solutions(line)
    keyed = Subpopulation(DepotConfiguration.of(line, [0, 1]))
    population = Population([keyed])

    assert insert_offspring(population, sols["a"], SMALL)
    assert not insert_offspring(population, sols["a_reversed"], SMALL)
    # no free subpopulation to take depot set {1}
    assert not insert_offspring(population, sols["d"], SMALL)
    assert keyed.members == [sols["a"]]


def test_insert_offspring_logs_unplaced(line, mocker):
    sols = _line_solutions(line)
    population = Population([Subpopulation(DepotConfiguration.of(line, [0, 1]))])
    debug = mocker.patch("hgamp.population.LOG.debug")

    assert not insert_offspring(population, sols["d"], SMALL)
    debug.assert_called_once()
    assert "no subpopulation" in debug.call_args.args[0]

    debug.reset_mock()
    assert insert_offspring(population, sols["a"], SMALL)
    debug.assert_not_called()


def test_insert_offspring_triggers_selection(line):
    sols = _line_solutions(line)
    population = Population([Subpopulation()])
    params = RunParams(mu=2, lam=2)

    for key in ("a", "b", "d", "e"):
        insert_offspring(population, sols[key], params)

    assert len(population.free) == 2
    assert sols["d"] in population.free.members


def test_record_tracks_incumbent(line):
    sols = _line_solutions(line)
    population = Population([Subpopulation()])
    population.stagnation = 7

    assert population.record(sols["a"])
    assert not population.record(sols["b"])
    assert population.stagnation == 0
    assert population.record(sols["d"])
    assert population.best.cost == 73
    assert population.best is not sols["d"]


def test_select_parents(line):
    sols = _line_solutions(line)
    keyed = Subpopulation(DepotConfiguration.of(line, [0, 1]))
    keyed.members.extend([sols["a"], sols["b"]])
    free = Subpopulation()
    free.members.append(sols["d"])
    population = Population([keyed, free])

    # two subpopulations: each parent comes from a different one
    for seed in range(10):
        a, b = select_parents(population, np.random.default_rng(seed))
        assert (a is sols["d"]) != (b is sols["d"])


def test_select_parents_distinct_subpops(line):
    sols = _line_solutions(line)
    subpops = [
        Subpopulation(DepotConfiguration.of(line, [0, 1])),
        Subpopulation(DepotConfiguration.of(line, [1])),
        Subpopulation(),
    ]
    subpops[0].members.append(sols["a"])
    subpops[1].members.append(sols["d"])
    subpops[2].members.append(sols["e"])
    home = {id(sols["a"]): 0, id(sols["d"]): 1, id(sols["e"]): 2}
    population = Population(subpops)

    for seed in range(20):
        a, b = select_parents(population, np.random.default_rng(seed))
        assert home[id(a)] != home[id(b)]


def test_select_parents_redraws_same_config(line):
    sols = _line_solutions(line)
    # one subpopulation holding both configurations: d alone on {1}, the rest on {0,1}
    free = Subpopulation()
    free.members.extend(sols[k] for k in ("d", "a", "b", "e"))
    population = Population([free])

    for seed in range(20):
        a, b = select_parents(population, np.random.default_rng(seed), redraws=50)
        assert a.depot_config != b.depot_config

    # without redraws a same-configuration pair is accepted as drawn
    same = 0
    for seed in range(40):
        a, b = select_parents(population, np.random.default_rng(seed), redraws=0)
        same += a.depot_config == b.depot_config
    assert same > 0


def test_select_parents_empty():
    with pytest.raises(HgampError):
        select_parents(Population([Subpopulation()]), np.random.default_rng(0))


def test_halve_subpops(line):
    sols = _line_solutions(line)
    subpops = [Subpopulation() for _ in range(5)]
    for subpop, key in zip(subpops, ("a", "b", "d", "e")):
        subpop.members.append(sols[key])
    population = Population(list(subpops))

    halve_subpops(population)

    # averages 166, 178, 73, 173 and an empty one; order is kept
    assert population.subpops == [subpops[0], subpops[2], subpops[3]]
    assert population.halved

    halve_subpops(population)
    assert len(population.subpops) == 3


@pytest.fixture
def grown(tiny):
    inst = roomy(tiny)
    rng = np.random.default_rng(5)
    lists = build_neighbor_lists(inst, 5)
    estimates = [mst_estimate(inst, i) for i in range(inst.m)]
    ranks = build_configurations(inst, SMALL.crh, lists, rng, estimates=estimates)
    population = init_population(inst, ranks, SMALL, lists, rng, estimates)
    return inst, rng, lists, estimates, ranks, population


def test_init_population(grown):
    inst, _rng, _lists, _estimates, ranks, population = grown

    assert len(population.subpops) == len(ranks) + 1
    assert population.free is population.subpops[-1]
    assert population.keys == [r.config for r in ranks]
    for subpop in population.subpops:
        assert 0 < len(subpop) < SMALL.mu + SMALL.lam
        assert all(m.feasible for m in subpop.members)
        if not subpop.is_free:
            assert all(m.depot_config == subpop.key for m in subpop.members)
    best = min(m.cost for s in population.subpops for m in s.members)
    assert population.best.cost <= best


def test_replace_worst_config(grown):
    inst, rng, lists, estimates, _ranks, population = grown
    known = population.subpops[0].members[0]

    assert not replace_worst_config(population, known, inst, SMALL, lists, rng, estimates)

    fresh = set(range(inst.m)) - set(known.opened)
    if not fresh:
        pytest.skip("every depot already in use")
    opened = known.opened + [min(fresh)]
    outsider = Solution(inst, [r.copy() for r in known.routes], open_empty=set(opened))
    if outsider.depot_config in population.keys:
        pytest.skip("configuration already tracked")
    worst = max(population.keyed, key=lambda s: (s.average, population.subpops.index(s)))

    assert replace_worst_config(population, outsider, inst, SMALL, lists, rng, estimates)
    assert worst.key == outsider.depot_config
    assert len(worst) > 0


def test_restart_if_stagnant(grown):
    inst, rng, lists, estimates, _ranks, population = grown
    best = population.best

    population.stagnation = SMALL.eta - 1
    assert restart_if_stagnant(population, inst, SMALL, lists, rng, estimates) is population

    population.stagnation = SMALL.eta
    fresh = restart_if_stagnant(population, inst, SMALL, lists, rng, estimates)

    assert fresh is not population
    assert fresh.restarts == 1
    assert fresh.stagnation == 0
    assert not fresh.halved
    assert fresh.best.cost <= best.cost
