"""Depot configuration construction and randomized greedy route building."""

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from hgamp import LOG
from hgamp.exceptions import ConstructionError, HgampError, InfeasibleInstanceError
from hgamp.localsearch import vnd_improve
from hgamp.logger import flag_extra
from hgamp.model import DepotConfiguration, Solution


@dataclass(frozen=True)
class CrhParams:
    r_min: float = 0.1
    r_max: float = 0.6
    h_max: int = 1000
    i_max: int = 1000
    p_d: float = 6.0
    n_t: int = 10
    gamma: int = 10

    def __post_init__(self):
        if not 0 <= self.r_min < self.r_max <= 1:
            raise HgampError(f"need 0 <= r_min < r_max <= 1, got {self.r_min}, {self.r_max}")
        if self.p_d <= 1:
            raise HgampError(f"p_d must be > 1, got {self.p_d}")
        if self.gamma > self.h_max:
            raise HgampError(f"gamma ({self.gamma}) must not exceed h_max ({self.h_max})")
        if min(self.h_max, self.i_max, self.n_t, self.gamma) < 1:
            raise HgampError("h_max, i_max, n_t and gamma must be positive")

    @classmethod
    def from_config(cls, section):
        return cls(**{k: section[k] for k in cls.__dataclass_fields__ if k in section})


@dataclass(frozen=True)
class DepotEstimate:
    depot: int
    covered: frozenset
    cost: float


@dataclass
class ConfigRank:
    attractiveness: float
    config: DepotConfiguration
    solutions: list = field(default_factory=list)


class SortedCandidateList:
    """Entries kept ascending by key; equal keys keep insertion order."""

    def __init__(self):
        self._entries = []
        self._counter = 0

    def add(self, key, payload):
        bisect.insort(self._entries, (key, self._counter, payload))
        self._counter += 1

    def keys(self):
        return [e[0] for e in self._entries]

    def payloads(self):
        return [e[2] for e in self._entries]

    def pop(self, index):
        return self._entries.pop(index)[2]

    def __getitem__(self, index):
        return self._entries[index][2]

    def __len__(self):
        return len(self._entries)


def mst_estimate(instance, depot):
    """
    Grow a Prim tree from `depot` over customers until the next one would exceed its capacity.

    The rough cost is opening cost, vehicles for the covered demand and the tree weight.
    """
    dist = instance.distances.entries
    m = instance.m
    demand = instance.demand
    capacity = instance.capacity[depot]

    keys = np.array(dist[depot, m:], dtype=float)
    in_tree = np.zeros(instance.n, dtype=bool)
    covered = []
    load = 0
    weight = 0

    while len(covered) < instance.n:
        masked = np.where(in_tree, np.inf, keys)
        k = int(np.argmin(masked))
        v = m + k
        if load + demand[v] > capacity:
            break
        in_tree[k] = True
        covered.append(v)
        load += demand[v]
        weight += float(masked[k])
        keys = np.minimum(keys, dist[v, m:])

    vehicles = math.ceil(load / instance.vehicle_capacity) if load else 0
    cost = instance.opening[depot] + instance.vehicle_fixed_cost * vehicles + weight
    return DepotEstimate(depot, frozenset(covered), cost)


def pick_index(size, p_d, rng):
    if size <= 0:
        raise HgampError("cannot pick from an empty candidate list")
    y = rng.random()
    return min(int(math.floor(y**p_d * size)), size - 1)


def probabilistic_pick(candidates, p_d, rng):
    """Pick the `floor(y**p_d * |L|)`-th entry, favoring the head of the list."""
    return candidates[pick_index(len(candidates), p_d, rng)]


def overlap_ratio(covered_h, covered_i):
    union = covered_h | covered_i
    if not union:
        return 0.0
    return len(covered_h & covered_i) / len(union)


def ratio_bound(params, capacity, covered_capacity, total_demand):
    share = (capacity + covered_capacity) / total_demand
    return (params.r_max - params.r_min) * share + params.r_min


def _check_capacity(instance):
    if instance.total_capacity < instance.total_demand:
        raise InfeasibleInstanceError(
            f"total depot capacity {instance.total_capacity} "
            f"is below total demand {instance.total_demand}"
        )


def preliminary_filter(instance, params, rng, estimates=None, trace=None):
    """
    Generate up to `h_max` distinct configurations balancing rough cost and dispersion.

    A dead end (no depot under the overlap bound) or a duplicate counts as a
    failure; `i_max` consecutive failures stop the search. When `trace` is a
    list, every ratio test is appended to it as a dict.
    """
    _check_capacity(instance)
    if estimates is None:
        estimates = [mst_estimate(instance, i) for i in range(instance.m)]

    total = instance.total_demand
    capacity = instance.capacity
    configs = []
    seen = set()
    failures = 0

    while len(configs) < params.h_max and failures < params.i_max:
        start = int(rng.integers(instance.m))
        chosen = [start]
        covered = set(estimates[start].covered)
        covered_capacity = capacity[start]

        while covered_capacity < total:
            candidates = SortedCandidateList()
            for i in range(instance.m):
                if i in chosen:
                    continue
                r_i = overlap_ratio(covered, estimates[i].covered)
                r_b = ratio_bound(params, capacity[i], covered_capacity, total)
                if trace is not None:
                    trace.append(
                        {
                            "selected": tuple(chosen),
                            "depot": i,
                            "r_i": r_i,
                            "r_b": r_b,
                            "t_c": covered_capacity,
                        }
                    )
                if r_i < r_b:
                    candidates.add(estimates[i].cost, i)

            if not candidates:
                chosen = []
                break

            i = probabilistic_pick(candidates, params.p_d, rng)
            covered |= estimates[i].covered
            chosen.append(i)
            covered_capacity += capacity[i]

        if not chosen:
            failures += 1
            continue

        config = DepotConfiguration.of(instance, chosen)
        if config in seen:
            failures += 1
            continue
        seen.add(config)
        configs.append(config)
        failures = 0

    LOG.debug(f"preliminary filter kept {len(configs)} configurations")
    return configs


def rgh_build(instance, config, rng):
    """
    Randomized greedy build restricted to the depots of `config`.

    Routes start from the customer nearest the active depot and grow by
    nearest neighbor; a full vehicle starts a new route and an exhausted depot
    hands over to another random depot of the configuration.
    """
    if config.total_capacity < instance.total_demand:
        raise ConstructionError(f"configuration {config} cannot cover total demand")

    dist = instance.distances.entries
    m = instance.m
    demand = np.array(instance.demand[m:], dtype=float)
    q = instance.vehicle_capacity
    residual = {i: instance.capacity[i] for i in config.open}
    waiting = [int(i) for i in rng.permutation(list(config.open))]
    unvisited = np.ones(instance.n, dtype=bool)

    def next_depot():
        if waiting:
            return waiting.pop()
        # every depot has served once; reuse the roomiest one that still fits a customer
        fits = [i for i in config.open if np.any(unvisited & (demand <= residual[i]))]
        if not fits:
            raise ConstructionError(f"no depot of {config} can host the remaining customers")
        return max(fits, key=lambda i: (residual[i], -i))

    def nearest(anchor, limit=None):
        mask = unvisited if limit is None else unvisited & (demand <= limit)
        if not mask.any():
            return None
        return int(np.argmin(np.where(mask, dist[anchor, m:], np.inf)))

    sequences = []
    depot = next_depot()
    route = []
    load = 0

    while unvisited.any():
        if not route:
            k = nearest(depot, residual[depot])
            if k is None:
                depot = next_depot()
                continue
        else:
            k = nearest(route[-1])
            if load + demand[k] > q:
                sequences.append((depot, route))
                route, load = [], 0
                continue
            if demand[k] > residual[depot]:
                sequences.append((depot, route))
                route, load = [], 0
                depot = next_depot()
                continue

        route.append(m + k)
        load += demand[k]
        residual[depot] -= instance.demand[m + k]
        unvisited[k] = False

    if route:
        sequences.append((depot, route))

    return Solution.from_sequences(instance, sequences)


def random_config_build(instance, estimates, p_d, rng):
    """Pick depots by rough cost until the capacity covers the demand, ignoring dispersion."""
    _check_capacity(instance)
    candidates = SortedCandidateList()
    for est in estimates:
        candidates.add(est.cost, est.depot)

    chosen = []
    covered_capacity = 0
    while covered_capacity < instance.total_demand:
        i = candidates.pop(pick_index(len(candidates), p_d, rng))
        chosen.append(i)
        covered_capacity += instance.capacity[i]
    return DepotConfiguration.of(instance, chosen)


def rank_configurations(instance, configs, params, lists, rng):
    """Score each configuration by the mean objective of `n_t` improved greedy builds."""
    if not configs:
        raise HgampError("secondary filter needs at least one configuration")

    ranks = []
    for config in configs:
        solutions = []
        for _ in range(params.n_t):
            try:
                solution = rgh_build(instance, config, rng)
            except ConstructionError as e:
                LOG.debug(f"skipping greedy build: {e}")
                continue
            solutions.append(vnd_improve(solution, lists, instance))
        if not solutions:
            continue
        attractiveness = sum(s.cost for s in solutions) / len(solutions)
        ranks.append(ConfigRank(attractiveness, config, solutions))

    if not ranks:
        raise ConstructionError("no configuration admits a greedy solution")

    ranks.sort(key=lambda r: (r.attractiveness, r.config.open))
    return ranks[: params.gamma]


def secondary_filter(instance, configs, params, rng, lists):
    return [r.config for r in rank_configurations(instance, configs, params, lists, rng)]


def build_configurations(
    instance, params, lists, rng, seed_configs=(), mode="add", estimates=None
):
    """
    Run both filters, optionally mixing in externally supplied configurations.

    With mode `add` the supplied configurations join the preliminary set; with
    `replace` they are the only input to the secondary filter.
    """
    if mode not in ("add", "replace"):
        raise HgampError(f"unknown seed configuration mode '{mode}'")

    injected = []
    for config in seed_configs:
        if config.covers(instance):
            injected.append(config)
        else:
            LOG.warning(
                f"skipping seed configuration {config}: capacity below total demand",
                extra=flag_extra({"config": str(config)}),
            )

    if mode == "replace" and injected:
        pool = injected
    else:
        if mode == "replace":
            LOG.warning("no usable seed configurations, falling back to the preliminary filter")
        pool = preliminary_filter(instance, params, rng, estimates)
        pool = list(dict.fromkeys(pool + injected))
        if not pool:
            LOG.warning("preliminary filter found no configuration, opening every depot")
            pool = [DepotConfiguration.of(instance, range(instance.m))]

    ranks = rank_configurations(instance, pool, params, lists, rng)
    LOG.info(
        f"secondary filter kept {len(ranks)} of {len(pool)} configurations",
        extra=flag_extra({"instance": instance.name}),
    )
    return ranks
