"""Configuration-keyed subpopulations and their management."""

import math

from hgamp import LOG
from hgamp.construct import build_configurations, random_config_build, rgh_build
from hgamp.exceptions import ConstructionError, HgampError, InternalInvariantError
from hgamp.localsearch import vnd_improve
from hgamp.logger import flag_extra
from hgamp.model import broken_pairs_distance


class Subpopulation:
    """Members sharing one depot configuration, or any configuration when `key` is None."""

    def __init__(self, key=None):
        self.key = key
        self.members = []
        self._distances = {}

    @property
    def is_free(self):
        return self.key is None

    @property
    def average(self):
        if not self.members:
            return math.inf
        return sum(s.cost for s in self.members) / len(self.members)

    def best(self):
        return min(self.members, key=lambda s: s.cost) if self.members else None

    def distance(self, a, b):
        key = (id(a), id(b)) if id(a) <= id(b) else (id(b), id(a))
        if key not in self._distances:
            self._distances[key] = broken_pairs_distance(a, b)
        return self._distances[key]

    def is_clone(self, solution):
        return any(broken_pairs_distance(m, solution) == 0 for m in self.members)

    def remove(self, index):
        gone = id(self.members.pop(index))
        self._distances = {k: v for k, v in self._distances.items() if gone not in k}

    def clear(self):
        self.members = []
        self._distances = {}

    def __len__(self):
        return len(self.members)

    def __repr__(self):
        label = "free" if self.is_free else str(self.key)
        return f"Subpopulation({label}, size={len(self.members)})"


class Population:
    def __init__(self, subpops):
        self.subpops = subpops
        self.best = None
        self.stagnation = 0
        self.halved = False
        self.restarts = 0

    @property
    def keyed(self):
        return [s for s in self.subpops if not s.is_free]

    @property
    def free(self):
        return next((s for s in self.subpops if s.is_free), None)

    @property
    def keys(self):
        return [s.key for s in self.keyed]

    def target(self, solution):
        config = solution.depot_config
        for s in self.keyed:
            if s.key == config:
                return s
        return self.free

    def record(self, solution):
        """Track the incumbent; returns True on strict improvement."""
        if self.best is None or solution.cost < self.best.cost:
            self.best = solution.copy()
            self.stagnation = 0
            return True
        return False


def diversity_contributions(subpop, n_close):
    members = subpop.members
    result = []
    for i, a in enumerate(members):
        dists = sorted(subpop.distance(a, b) for j, b in enumerate(members) if j != i)
        closest = dists[:n_close]
        result.append(sum(closest) / len(closest) if closest else 0.0)
    return result


def biased_fitness(subpop, n_close, n_elite):
    members = subpop.members
    size = len(members)
    by_cost = sorted(range(size), key=lambda i: (members[i].cost, i))
    diversity = diversity_contributions(subpop, n_close)
    by_div = sorted(range(size), key=lambda i: (-diversity[i], i))
    rank_f = [0] * size
    rank_div = [0] * size
    for rank, i in enumerate(by_cost):
        rank_f[i] = rank
    for rank, i in enumerate(by_div):
        rank_div[i] = rank
    weight = 1.0 - n_elite / size
    return [rank_f[i] + weight * rank_div[i] for i in range(size)]


def adq_select(subpop, mu, lam, n_close=5, n_elite=None):
    """
    Shrink a full subpopulation to `mu` survivors by biased fitness.

    Clones go first; the best member is never removed. Ranks are recomputed
    after every removal.
    """
    if len(subpop) < mu + lam:
        raise InternalInvariantError(
            f"survivor selection needs {mu + lam} members, got {len(subpop)}"
        )
    if n_elite is None:
        n_elite = mu // 2

    while len(subpop) > mu:
        members = subpop.members
        fitness = biased_fitness(subpop, n_close, n_elite)
        keep = min(range(len(members)), key=lambda i: (members[i].cost, i))
        candidates = [i for i in range(len(members)) if i != keep]
        clones = [
            i
            for i in candidates
            if any(
                subpop.distance(members[i], members[j]) == 0
                for j in range(len(members))
                if j != i
            )
        ]
        pool = clones or candidates
        victim = max(pool, key=lambda i: (fitness[i], members[i].cost, i))
        subpop.remove(victim)
    return subpop


def insert_offspring(population, solution, params):
    """Add a feasible solution to its subpopulation.

    Returns False for clones and for configurations no subpopulation takes.
    """
    subpop = population.target(solution)
    if subpop is None:
        LOG.debug(f"no subpopulation takes configuration {solution.depot_config}")
        return False
    if subpop.is_clone(solution):
        return False
    subpop.members.append(solution)
    if len(subpop) >= params.mu + params.lam:
        adq_select(subpop, params.mu, params.lam, params.n_close, params.n_elite or None)
    return True


def _tournament(size, better, rng):
    a = int(rng.integers(size))
    b = int(rng.integers(size))
    return a if better(a, b) else b


def _member_tournament(subpop, rng):
    members = subpop.members
    return members[_tournament(len(members), lambda a, b: members[a].cost <= members[b].cost, rng)]


def select_parents(population, rng, redraws=10):
    """
    Binary tournaments over subpopulation averages, then over members.

    The second parent is redrawn up to `redraws` times while it shares the
    first parent's depot configuration.
    """
    nonempty = [s for s in population.subpops if s.members]
    if not nonempty:
        raise HgampError("population is empty")

    if len(nonempty) == 1:
        first = second = nonempty[0]
    else:
        averages = [s.average for s in nonempty]
        i = _tournament(len(nonempty), lambda a, b: averages[a] <= averages[b], rng)
        rest = [k for k in range(len(nonempty)) if k != i]
        j = rest[_tournament(len(rest), lambda a, b: averages[rest[a]] <= averages[rest[b]], rng)]
        first, second = nonempty[i], nonempty[j]

    parent_a = _member_tournament(first, rng)
    parent_b = _member_tournament(second, rng)
    config = parent_a.depot_config
    tries = 0
    while parent_b.depot_config == config and tries < redraws:
        parent_b = _member_tournament(second, rng)
        tries += 1
    return parent_a, parent_b


def fill_subpop(population, subpop, instance, params, lists, rng, estimates):
    """Generate `4 * mu` improved greedy solutions into `subpop`."""
    for _ in range(4 * params.mu):
        if subpop.is_free:
            config = random_config_build(instance, estimates, params.crh.p_d, rng)
        else:
            config = subpop.key
        try:
            solution = rgh_build(instance, config, rng)
        except ConstructionError as e:
            LOG.debug(f"skipping greedy build: {e}")
            continue
        vnd_improve(solution, lists, instance)
        population.record(solution)
        if subpop.is_free or solution.depot_config == subpop.key:
            if not subpop.is_clone(solution):
                subpop.members.append(solution)
                if len(subpop) >= params.mu + params.lam:
                    adq_select(
                        subpop, params.mu, params.lam, params.n_close, params.n_elite or None
                    )
        else:
            insert_offspring(population, solution, params)
    return subpop


def init_population(instance, ranks, params, lists, rng, estimates):
    """One subpopulation per ranked configuration plus a free one."""
    subpops = [Subpopulation(r.config) for r in ranks] + [Subpopulation()]
    population = Population(subpops)
    for rank in ranks:
        for solution in rank.solutions:
            population.record(solution)
    for subpop in subpops:
        fill_subpop(population, subpop, instance, params, lists, rng, estimates)
    LOG.info(
        f"population ready: {', '.join(repr(s) for s in subpops)}",
        extra=flag_extra({"instance": instance.name}),
    )
    return population


def replace_worst_config(population, solution, instance, params, lists, rng, estimates):
    """Rekey the worst-average keyed subpopulation to the configuration of `solution`.

    Returns True if a subpopulation was rekeyed.
    """
    config = solution.depot_config
    keyed = population.keyed
    if not keyed or config in population.keys:
        return False

    worst = max(keyed, key=lambda s: (s.average, population.subpops.index(s)))
    LOG.info(f"replacing configuration {worst.key} by {config}")
    worst.clear()
    worst.key = config
    worst.members.append(solution)
    fill_subpop(population, worst, instance, params, lists, rng, estimates)
    return True


def restart_if_stagnant(population, instance, params, lists, rng, estimates):
    """Rebuild everything from fresh configurations after `eta` idle local searches.

    The incumbent survives the restart.
    """
    if population.stagnation < params.eta:
        return population

    LOG.info(
        f"restarting after {population.stagnation} local searches without improvement",
        extra=flag_extra({"instance": instance.name}),
    )
    ranks = build_configurations(
        instance, params.crh, lists, rng, params.seed_configs, params.seed_configs_mode, estimates
    )
    fresh = init_population(instance, ranks, params, lists, rng, estimates)
    old = population.best
    if old is not None and (fresh.best is None or old.cost <= fresh.best.cost):
        fresh.best = old
    fresh.stagnation = 0
    fresh.restarts = population.restarts + 1
    return fresh


def halve_subpops(population):
    """Keep the better half (rounded up) of the subpopulations by average objective.

    Runs once per epoch.
    """
    if population.halved:
        return population
    subpops = population.subpops
    order = sorted(range(len(subpops)), key=lambda i: (subpops[i].average, i))
    survivors = sorted(order[: math.ceil(len(population.subpops) / 2)])
    population.subpops = [population.subpops[i] for i in survivors]
    population.halved = True
    LOG.info(f"halved to {len(population.subpops)} subpopulations")
    return population
