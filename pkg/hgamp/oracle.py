"""Exact optimum of tiny instances by dynamic programming over customer subsets."""

import math

from hgamp import LOG
from hgamp.exceptions import InfeasibleInstanceError, OracleSizeError
from hgamp.model import Route, Solution

MAX_CUSTOMERS = 8
MAX_DEPOTS = 3


def _subsets(mask):
    sub = mask
    while sub:
        yield sub
        sub = (sub - 1) & mask


def _held_karp(instance, depot, vertices):
    """Cheapest closed tour from `depot` through every subset.

    Returns the cost table and the last-vertex table, both indexed by subset mask.
    """
    c = instance.c
    size = len(vertices)
    full = 1 << size
    path = [[math.inf] * size for _ in range(full)]
    prev = [[-1] * size for _ in range(full)]
    for k, v in enumerate(vertices):
        path[1 << k][k] = c[depot][v]

    for mask in range(1, full):
        for k in range(size):
            here = path[mask][k]
            if here == math.inf or not mask >> k & 1:
                continue
            for j in range(size):
                if mask >> j & 1:
                    continue
                nxt = mask | 1 << j
                cand = here + c[vertices[k]][vertices[j]]
                if cand < path[nxt][j]:
                    path[nxt][j] = cand
                    prev[nxt][j] = k

    tour = [math.inf] * full
    last = [-1] * full
    tour[0] = 0
    for mask in range(1, full):
        for k in range(size):
            if mask >> k & 1 and path[mask][k] < math.inf:
                cand = path[mask][k] + c[vertices[k]][depot]
                if cand < tour[mask]:
                    tour[mask] = cand
                    last[mask] = k
    return tour, last, prev


def _unwind(mask, k, prev, vertices):
    order = []
    while k != -1:
        order.append(vertices[k])
        mask, k = mask & ~(1 << k), prev[mask][k]
    order.reverse()
    return order


def brute_force_oracle(instance):
    """
    Return `(cost, solution)` for a global optimum of `instance`.

    Every depot subset, customer assignment, route partition and visiting
    order is covered: tours per (depot, subset) come from Held-Karp, the
    partition of a depot's customers into vehicle loads is a subset DP, and
    the depots are chained by a final DP that charges opening costs and
    respects depot capacities.

    :raises OracleSizeError: for more than 8 customers or 3 depots
    :raises InfeasibleInstanceError: when no assignment respects the capacities
    """
    if instance.n > MAX_CUSTOMERS or instance.m > MAX_DEPOTS:
        raise OracleSizeError(
            f"exhaustive search supports n <= {MAX_CUSTOMERS} and m <= {MAX_DEPOTS}, "
            f"got n={instance.n}, m={instance.m}"
        )

    vertices = list(instance.customer_vertices)
    size = len(vertices)
    full = (1 << size) - 1
    demand = [0] * (full + 1)
    for mask in range(1, full + 1):
        low = (mask & -mask).bit_length() - 1
        demand[mask] = demand[mask & (mask - 1)] + instance.demand[vertices[low]]

    q = instance.vehicle_capacity
    fixed = instance.vehicle_fixed_cost
    tours = []
    splits = []
    for i in range(instance.m):
        tour, last, prev = _held_karp(instance, i, vertices)
        route = [tour[s] + fixed if demand[s] <= q else math.inf for s in range(full + 1)]
        part = [math.inf] * (full + 1)
        pick = [0] * (full + 1)
        part[0] = 0
        for mask in range(1, full + 1):
            low = mask & -mask
            for sub in _subsets(mask):
                if not sub & low or route[sub] == math.inf:
                    continue
                cand = route[sub] + part[mask ^ sub]
                if cand < part[mask]:
                    part[mask] = cand
                    pick[mask] = sub
        tours.append((last, prev))
        splits.append((part, pick))

    best = [0] + [math.inf] * full
    choices = []
    for i in range(instance.m):
        part, _pick = splits[i]
        nxt = list(best)
        chosen = [0] * (full + 1)
        for mask in range(1, full + 1):
            for sub in _subsets(mask):
                if demand[sub] > instance.capacity[i] or part[sub] == math.inf:
                    continue
                cand = best[mask ^ sub] + instance.opening[i] + part[sub]
                if cand < nxt[mask]:
                    nxt[mask] = cand
                    chosen[mask] = sub
        best = nxt
        choices.append(chosen)

    if best[full] == math.inf:
        raise InfeasibleInstanceError(f"{instance.name}: no capacity-feasible solution exists")

    routes = []
    mask = full
    for i in reversed(range(instance.m)):
        served = choices[i][mask]
        mask ^= served
        part, pick = splits[i]
        last, prev = tours[i]
        while served:
            sub = pick[served]
            routes.append(Route(i, _unwind(sub, last[sub], prev, vertices)))
            served ^= sub

    solution = Solution(instance, sorted(routes, key=lambda r: (r.depot, r.customers)))
    LOG.debug(
        f"oracle optimum for {instance.name}: {solution.cost} "
        f"with depots {solution.depot_config}"
    )
    return solution.cost, solution
