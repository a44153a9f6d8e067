"""Penalty-driven repair of capacity violations and similarity-based mutation."""

import math
from collections import Counter, deque

import numpy as np

from hgamp import LOG
from hgamp.exceptions import InfeasibleInstanceError, RepairError
from hgamp.localsearch import (
    IMPROVEMENT_EPS,
    LOAD_EPS,
    RELOCATE1,
    SWAP11,
    TWO_OPT_STAR,
    VARIANTS,
    SearchState,
)
from hgamp.logger import flag_extra
from hgamp.model import Route

REPAIR_KINDS = (RELOCATE1, SWAP11, TWO_OPT_STAR)


def generalized_cost(solution, p_l, p_r):
    return solution.cost + p_l * solution.f_l + p_r * solution.f_r


def _opened_capacity(solution, instance):
    return sum(instance.capacity[i] for i in solution.opened)


def expand_depots(solution, instance):
    """
    Open depots until the opened capacity covers total demand.

    Each step moves the customer of an overloaded depot whose transfer to a
    fresh single-customer route at an unopened depot adds the least travel.
    """
    c = instance.c
    while _opened_capacity(solution, instance) < instance.total_demand:
        opened = set(solution.opened)
        closed = [i for i in range(instance.m) if i not in opened]
        if not closed:
            raise InfeasibleInstanceError("all depots are open and capacity is still short")

        best = None
        for r, route in enumerate(solution.routes):
            if solution.depot_load[route.depot] <= instance.capacity[route.depot]:
                continue
            seq = [route.depot, *route.customers, route.depot]
            for p in range(1, len(seq) - 1):
                v = seq[p]
                saving = c[seq[p - 1]][v] + c[v][seq[p + 1]] - c[seq[p - 1]][seq[p + 1]]
                for i in closed:
                    delta = c[i][v] + c[v][i] - saving
                    key = (delta, v, i)
                    if best is None or key < best[0]:
                        best = (key, r, v, i)

        if best is None:
            raise InfeasibleInstanceError("no overloaded depot to relieve")

        _key, r, v, i = best
        solution.routes[r].customers.remove(v)
        solution.routes.append(Route(i, [v]))
        solution.prune_empty()
        solution.refresh()
        LOG.debug(f"opened depot {i} for customer {v}")
    return solution


class TabuList:
    """The last `tenure` accepted moves as (removed edges, added edges) pairs."""

    def __init__(self, tenure):
        self.moves = deque(maxlen=max(tenure, 1))

    def add(self, removed, added):
        self.moves.append((removed, added))

    def forbids(self, removed, added):
        # undoing a move removes what it added and adds back what it removed
        return (added, removed) in self.moves

    def __len__(self):
        return len(self.moves)


def _route_edges(depot, customers):
    if not customers:
        return Counter()
    seq = [depot, *customers, depot]
    return Counter((min(a, b), max(a, b)) for a, b in zip(seq, seq[1:]))


def _edge_change(state, plan):
    before = Counter()
    after = Counter()
    for r, depot, segments in plan:
        if r is not None:
            route = state.solution.routes[r]
            before += _route_edges(route.depot, route.customers)
        customers = []
        for sr, a, b, rev in segments:
            if a <= b:
                piece = state.seq[sr][a : b + 1]
                customers.extend(reversed(piece) if rev else piece)
        after += _route_edges(depot, customers)
    removed = frozenset((before - after).items())
    added = frozenset((after - before).items())
    return removed, added


def _repair_plans(state):
    inst = state.instance
    routes = state.solution.routes
    for u in inst.customer_vertices:
        ru, pu = state.where[u]
        for v in state.lists[u]:
            rv, pv = state.where[v]
            if ru == rv:
                continue
            anchors = [(rv, pv)]
            if pv == 1:
                anchors.append((rv, 0))
            for kind in REPAIR_KINDS:
                for ar, ap in anchors:
                    if ap == 0 and kind == SWAP11:
                        continue
                    for variant in range(VARIANTS[kind]):
                        plan = state.plan(kind, ru, pu, ar, ap, variant)
                        if plan is not None:
                            yield plan
        # relocation into a fresh route at any depot
        du = routes[ru].depot
        for depot in range(inst.m):
            yield [
                (ru, du, [(ru, 1, pu - 1, False), (ru, pu + 1, state.size(ru), False)]),
                (None, depot, [(ru, pu, pu, False)]),
            ]


def repair(solution, instance, lists, rng, tenure=20, penalty_cap=1e9):
    """
    Restore capacity feasibility by best-improvement descent on the penalized cost.

    Penalty factors start at 1 and grow tenfold whenever no improving non-tabu
    move remains; reversing one of the last `tenure` moves is forbidden.

    :raises RepairError: if the penalty factors pass `penalty_cap` with violations left
    """
    if solution.feasible:
        return solution

    expand_depots(solution, instance)
    p_l = p_r = 1.0
    tabu = TabuList(tenure)
    state = SearchState(solution, lists)

    while not solution.feasible:
        best = None
        for plan in _repair_plans(state):
            effect = state.evaluate(plan)
            d_fl, d_fr = state.penalty_delta(effect)
            gain = effect.delta + p_l * d_fl + p_r * d_fr
            if gain >= -IMPROVEMENT_EPS or (best is not None and gain >= best[0]):
                continue
            removed, added = _edge_change(state, plan)
            if tabu.forbids(removed, added):
                continue
            best = (gain, plan, removed, added)

        if best is not None:
            _gain, plan, removed, added = best
            state.apply(plan)
            tabu.add(removed, added)
            continue

        if p_l >= penalty_cap:
            LOG.warning(
                f"repair gave up with f_l={solution.f_l}, f_r={solution.f_r}",
                extra=flag_extra({"instance": instance.name}),
            )
            raise RepairError(f"penalty factors reached {p_l} with violations left")
        p_l *= 10
        p_r *= 10

    return solution


def _removal_count(xi, n):
    return min(n, max(1, int(math.floor(xi * n + 0.5))))


def _cheapest_insertion(solution, instance, v, depots, allow_closed):
    c = instance.c
    q = instance.vehicle_capacity
    d = instance.demand[v]
    best = None
    for r, route in enumerate(solution.routes):
        if route.depot not in depots:
            continue
        if route.load + d > q + LOAD_EPS:
            continue
        if solution.depot_load[route.depot] + d > instance.capacity[route.depot] + LOAD_EPS:
            continue
        seq = [route.depot, *route.customers, route.depot]
        for p in range(len(seq) - 1):
            delta = c[seq[p]][v] + c[v][seq[p + 1]] - c[seq[p]][seq[p + 1]]
            if best is None or delta < best[0]:
                best = (delta, r, p)

    opened = set(solution.opened)
    for i in sorted(depots):
        if i not in opened and not allow_closed:
            continue
        if solution.depot_load[i] + d > instance.capacity[i] + LOAD_EPS:
            continue
        delta = c[i][v] + c[v][i] + instance.vehicle_fixed_cost
        if i not in opened:
            delta += instance.opening[i]
        if best is None or delta < best[0]:
            best = (delta, None, i)
    return best


def _insert(solution, instance, v, choice):
    _delta, r, where = choice
    if r is None:
        route = Route(where, [v], instance)
        solution.routes.append(route)
        solution.open_empty.discard(where)
    else:
        route = solution.routes[r]
        route.customers.insert(where, v)
        route.refresh(instance)
    solution.depot_load[route.depot] += instance.demand[v]


def mutate(solution, zeta, xi, instance, lists, rng):
    """
    With probability `zeta`, remove a cluster of related customers and reinsert them greedily.

    The cluster grows from a random customer by roulette on `1 / (1 + distance)`.
    Reinsertion keeps to the current depot configuration when it can; the input
    is returned untouched when some customer has no feasible place at all.
    """
    if rng.random() >= zeta:
        return solution

    c = instance.c
    customers = list(instance.customer_vertices)
    k = _removal_count(xi, instance.n)
    seed = customers[int(rng.integers(len(customers)))]
    removed = [seed]
    pool = [v for v in customers if v != seed]
    while len(removed) < k:
        weights = np.array([1.0 / (1.0 + c[seed][j]) for j in pool])
        pick = int(rng.choice(len(pool), p=weights / weights.sum()))
        removed.append(pool.pop(pick))

    mutant = solution.copy()
    config = set(solution.opened)
    dropped = set(removed)
    for route in mutant.routes:
        route.customers = [v for v in route.customers if v not in dropped]
    mutant.prune_empty()
    mutant.open_empty = config - {r.depot for r in mutant.routes}
    mutant.refresh()

    for v in removed:
        choice = _cheapest_insertion(mutant, instance, v, config, allow_closed=False)
        if choice is None:
            everywhere = set(range(instance.m))
            choice = _cheapest_insertion(mutant, instance, v, everywhere, allow_closed=True)
        if choice is None:
            return solution
        _insert(mutant, instance, v, choice)

    mutant.open_empty.clear()
    mutant.refresh()
    return mutant
