"""Granular neighborhood search under variable neighborhood descent."""

from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from hgamp.exceptions import HgampError, InvalidMoveError
from hgamp.model import Route

IMPROVEMENT_EPS = 1e-9
LOAD_EPS = 1e-9

RELOCATE1 = "relocate1"
RELOCATE2 = "relocate2"
SWAP11 = "swap11"
SWAP22 = "swap22"
TWO_OPT = "two_opt"
TWO_OPT_STAR = "two_opt_star"

INTRA = "intra"
INTER = "inter"

NEIGHBORHOODS = (
    (RELOCATE1, INTRA),
    (RELOCATE1, INTER),
    (RELOCATE2, INTRA),
    (RELOCATE2, INTER),
    (SWAP11, INTRA),
    (SWAP11, INTER),
    (SWAP22, INTRA),
    (SWAP22, INTER),
    (TWO_OPT, INTRA),
    (TWO_OPT_STAR, INTER),
)

# swap22 also covers the unbalanced pair-for-single exchanges
SWAP_BLOCKS = {SWAP11: ((1, 1),), SWAP22: ((2, 2), (2, 1), (1, 2))}
VARIANTS = {RELOCATE1: 1, RELOCATE2: 2, SWAP11: 1, SWAP22: 3, TWO_OPT: 1, TWO_OPT_STAR: 2}
DEPOT_ANCHORED = {RELOCATE1, RELOCATE2, TWO_OPT_STAR}


class NeighborLists:
    """The `alpha` nearest customers of every vertex, ties broken by lower index."""

    def __init__(self, instance, alpha):
        if alpha < 1:
            raise HgampError(f"granularity alpha must be >= 1, got {alpha}")
        self.alpha = alpha
        m, n = instance.m, instance.n
        dist = instance.distances.entries
        customers = np.arange(m, m + n)
        self.lists = []
        for v in range(m + n):
            others = customers[customers != v]
            order = np.lexsort((others, dist[v, others]))
            self.lists.append([int(others[k]) for k in order[:alpha]])

    def __getitem__(self, v):
        return self.lists[v]

    def __len__(self):
        return len(self.lists)


def build_neighbor_lists(instance, alpha):
    return NeighborLists(instance, alpha)


@dataclass(frozen=True)
class Move:
    """
    A neighborhood move anchored at customer `u` and vertex `v`.

    `v` may be a depot, in which case `route` names the route whose start is the anchor.
    """

    kind: str
    u: int
    v: int
    variant: int = 0
    route: int = None


@dataclass
class Effect:
    delta: float
    routes: list
    depot_load_delta: dict
    route_count_delta: dict


class SearchState:
    """
    Position index and prefix caches over a solution's routes.

    A plan is a list of `(route index or None, depot, segments)`; each segment
    `(r, a, b, reversed)` is the slice of positions `a..b` of route `r`
    (depots sit at position 0 and at the end). `None` creates a new route.
    """

    def __init__(self, solution, lists=None):
        self.solution = solution
        self.instance = solution.instance
        self.lists = lists
        self.c = self.instance.c
        self.demand = self.instance.demand
        self.reindex()

    def reindex(self):
        routes = self.solution.routes
        self.where = {}
        self.seq = []
        self.fwd = []
        self.bwd = []
        self.cload = []
        self.routes_at = Counter(r.depot for r in routes)
        for r in range(len(routes)):
            self._cache(r)

    def _cache(self, r):
        c = self.c
        route = self.solution.routes[r]
        seq = [route.depot, *route.customers, route.depot]
        fwd = [0] * len(seq)
        bwd = [0] * len(seq)
        load = [0] * len(seq)
        for p in range(1, len(seq)):
            fwd[p] = fwd[p - 1] + c[seq[p - 1]][seq[p]]
            bwd[p] = bwd[p - 1] + c[seq[p]][seq[p - 1]]
            load[p] = load[p - 1] + self.demand[seq[p]]
        self.seq.append(seq)
        self.fwd.append(fwd)
        self.bwd.append(bwd)
        self.cload.append(load)
        for p, v in enumerate(route.customers, 1):
            self.where[v] = (r, p)

    def size(self, r):
        return len(self.seq[r]) - 2

    def evaluate(self, plan):
        inst = self.instance
        routes = self.solution.routes
        c = self.c
        delta = 0
        planned = []
        load_delta = defaultdict(int)
        count_delta = defaultdict(int)

        for r, depot, segments in plan:
            prev = depot
            length = 0
            load = 0
            count = 0
            for sr, a, b, rev in segments:
                if a > b:
                    continue
                s = self.seq[sr]
                if rev:
                    first, last = s[b], s[a]
                    inner = self.bwd[sr][b] - self.bwd[sr][a]
                else:
                    first, last = s[a], s[b]
                    inner = self.fwd[sr][b] - self.fwd[sr][a]
                length += c[prev][first] + inner
                load += self.cload[sr][b] - self.cload[sr][a - 1]
                prev = last
                count += b - a + 1
            if count:
                length += c[prev][depot]

            was_used = r is not None and bool(routes[r].customers)
            if r is not None:
                delta -= routes[r].length
                load_delta[routes[r].depot] -= routes[r].load
            delta += length + inst.vehicle_fixed_cost * ((count > 0) - was_used)
            load_delta[depot] += load
            count_delta[depot] += (count > 0) - was_used
            planned.append((r, depot, load))

        for depot, change in count_delta.items():
            if depot in self.solution.open_empty or not change:
                continue
            before = self.routes_at.get(depot, 0)
            if before > 0 and before + change == 0:
                delta -= inst.opening[depot]
            elif before == 0 and before + change > 0:
                delta += inst.opening[depot]

        return Effect(delta, planned, dict(load_delta), dict(count_delta))

    def admissible(self, effect):
        """True when the plan keeps every touched route and depot within capacity."""
        inst = self.instance
        q = inst.vehicle_capacity
        if any(load > q + LOAD_EPS for _, _, load in effect.routes):
            return False
        depot_load = self.solution.depot_load
        for depot, change in effect.depot_load_delta.items():
            if change > 0 and depot_load[depot] + change > inst.capacity[depot] + LOAD_EPS:
                return False
        return True

    def penalty_delta(self, effect):
        """Change of depot overload and route overload caused by the plan."""
        inst = self.instance
        routes = self.solution.routes
        q = inst.vehicle_capacity
        d_fr = 0
        for r, _depot, load in effect.routes:
            old = routes[r].load if r is not None else 0
            d_fr += max(0, load - q) - max(0, old - q)
        d_fl = 0
        depot_load = self.solution.depot_load
        for depot, change in effect.depot_load_delta.items():
            w = inst.capacity[depot]
            d_fl += max(0, depot_load[depot] + change - w) - max(0, depot_load[depot] - w)
        return d_fl, d_fr

    def apply(self, plan):
        solution = self.solution
        inst = self.instance
        built = []
        for r, depot, segments in plan:
            customers = []
            for sr, a, b, rev in segments:
                if a > b:
                    continue
                piece = self.seq[sr][a : b + 1]
                customers.extend(reversed(piece) if rev else piece)
            built.append((r, depot, customers))

        for r, depot, customers in built:
            if r is None:
                solution.routes.append(Route(depot, customers, inst))
            else:
                route = solution.routes[r]
                route.customers = customers
                route.refresh(inst)

        solution.prune_empty()
        solution.depot_load = [0] * inst.m
        for route in solution.routes:
            solution.depot_load[route.depot] += route.load
        solution.recount()
        self.reindex()

    def anchor(self, v, route=None):
        """Resolve a vertex to `(route, position)`; depots need an explicit route."""
        if v in self.where:
            return self.where[v]
        if 0 <= v < self.instance.m and route is not None:
            routes = self.solution.routes
            if not 0 <= route < len(routes) or routes[route].depot != v:
                raise InvalidMoveError(f"route {route} does not start at depot {v}")
            return route, 0
        raise InvalidMoveError(f"vertex {v} is not on any route")

    def plan(self, kind, ru, pu, rv, pv, variant):
        return BUILDERS[kind](self, ru, pu, rv, pv, variant)

    def first_improvement(self, kind, scope, trace=None):
        """Return the first improving admissible plan of one neighborhood, or None."""
        builder = BUILDERS[kind]
        intra = scope == INTRA
        routes = self.solution.routes
        for u in self.instance.customer_vertices:
            ru, pu = self.where[u]
            for v in self.lists[u]:
                rv, pv = self.where[v]
                if (ru == rv) != intra:
                    continue
                anchors = [(v, rv, pv)]
                if pv == 1 and kind in DEPOT_ANCHORED:
                    anchors.append((routes[rv].depot, rv, 0))
                for anchor_v, ar, ap in anchors:
                    for variant in range(VARIANTS[kind]):
                        plan = builder(self, ru, pu, ar, ap, variant)
                        if plan is None:
                            continue
                        effect = self.evaluate(plan)
                        if effect.delta < -IMPROVEMENT_EPS and self.admissible(effect):
                            if trace is not None:
                                anchor_route = ar if ap == 0 else None
                                trace.append(Move(kind, u, anchor_v, variant, anchor_route))
                            return plan
        return None


def _relocate1(st, ru, pu, rv, pv, variant):
    ku = st.size(ru)
    du = st.solution.routes[ru].depot
    if pu < 1:
        return None
    if ru != rv:
        dv = st.solution.routes[rv].depot
        return [
            (ru, du, [(ru, 1, pu - 1, False), (ru, pu + 1, ku, False)]),
            (rv, dv, [(rv, 1, pv, False), (ru, pu, pu, False), (rv, pv + 1, st.size(rv), False)]),
        ]
    if pv < pu:
        segs = [
            (ru, 1, pv, False),
            (ru, pu, pu, False),
            (ru, pv + 1, pu - 1, False),
            (ru, pu + 1, ku, False),
        ]
    else:
        segs = [
            (ru, 1, pu - 1, False),
            (ru, pu + 1, pv, False),
            (ru, pu, pu, False),
            (ru, pv + 1, ku, False),
        ]
    return [(ru, du, segs)]


def _relocate2(st, ru, pu, rv, pv, variant):
    ku = st.size(ru)
    if pu < 1 or pu + 1 > ku:
        return None
    du = st.solution.routes[ru].depot
    block = (ru, pu, pu + 1, variant == 1)
    if ru != rv:
        dv = st.solution.routes[rv].depot
        return [
            (ru, du, [(ru, 1, pu - 1, False), (ru, pu + 2, ku, False)]),
            (rv, dv, [(rv, 1, pv, False), block, (rv, pv + 1, st.size(rv), False)]),
        ]
    if pv in (pu, pu + 1):
        return None
    if pv < pu:
        segs = [(ru, 1, pv, False), block, (ru, pv + 1, pu - 1, False), (ru, pu + 2, ku, False)]
    else:
        segs = [(ru, 1, pu - 1, False), (ru, pu + 2, pv, False), block, (ru, pv + 1, ku, False)]
    return [(ru, du, segs)]


def _swap(kind):
    def build(st, ru, pu, rv, pv, variant):
        lu, lv = SWAP_BLOCKS[kind][variant]
        ku, kv = st.size(ru), st.size(rv)
        if pu < 1 or pv < 1 or pu + lu - 1 > ku or pv + lv - 1 > kv:
            return None
        du = st.solution.routes[ru].depot
        if ru != rv:
            dv = st.solution.routes[rv].depot
            block_u = (ru, pu, pu + lu - 1, False)
            block_v = (rv, pv, pv + lv - 1, False)
            return [
                (ru, du, [(ru, 1, pu - 1, False), block_v, (ru, pu + lu, ku, False)]),
                (rv, dv, [(rv, 1, pv - 1, False), block_u, (rv, pv + lv, kv, False)]),
            ]
        (pa, la), (pb, lb) = sorted(((pu, lu), (pv, lv)))
        if pa + la > pb:
            return None
        return [
            (
                ru,
                du,
                [
                    (ru, 1, pa - 1, False),
                    (ru, pb, pb + lb - 1, False),
                    (ru, pa + la, pb - 1, False),
                    (ru, pa, pa + la - 1, False),
                    (ru, pb + lb, ku, False),
                ],
            )
        ]

    return build


def _two_opt(st, ru, pu, rv, pv, variant):
    if ru != rv or pu == pv:
        return None
    a, b = sorted((pu, pv))
    k = st.size(ru)
    segs = [(ru, 1, a, False), (ru, a + 1, b, True), (ru, b + 1, k, False)]
    return [(ru, st.solution.routes[ru].depot, segs)]


def _two_opt_star(st, ru, pu, rv, pv, variant):
    if ru == rv:
        return None
    ku, kv = st.size(ru), st.size(rv)
    du = st.solution.routes[ru].depot
    dv = st.solution.routes[rv].depot
    if variant == 0:
        return [
            (ru, du, [(ru, 1, pu, False), (rv, pv + 1, kv, False)]),
            (rv, dv, [(rv, 1, pv, False), (ru, pu + 1, ku, False)]),
        ]
    return [
        (ru, du, [(ru, 1, pu, False), (rv, 1, pv, True)]),
        (rv, dv, [(ru, pu + 1, ku, True), (rv, pv + 1, kv, False)]),
    ]


BUILDERS = {
    RELOCATE1: _relocate1,
    RELOCATE2: _relocate2,
    SWAP11: _swap(SWAP11),
    SWAP22: _swap(SWAP22),
    TWO_OPT: _two_opt,
    TWO_OPT_STAR: _two_opt_star,
}


def _resolve(state, move):
    if move.kind not in BUILDERS:
        raise InvalidMoveError(f"unknown move kind '{move.kind}'")
    if not 0 <= move.variant < VARIANTS[move.kind]:
        raise InvalidMoveError(f"variant {move.variant} out of range for {move.kind}")
    if move.u not in state.where:
        raise InvalidMoveError(f"customer {move.u} is not on any route")
    ru, pu = state.where[move.u]
    rv, pv = state.anchor(move.v, move.route)
    plan = state.plan(move.kind, ru, pu, rv, pv, move.variant)
    if plan is None:
        raise InvalidMoveError(f"{move.kind} is not defined for endpoints {move.u}, {move.v}")
    return plan


def evaluate_move(solution, move):
    """Objective change the move would cause, including fleet and depot opening effects."""
    state = SearchState(solution)
    return state.evaluate(_resolve(state, move)).delta


def apply_move(solution, move):
    state = SearchState(solution)
    plan = _resolve(state, move)
    delta = state.evaluate(plan).delta
    state.apply(plan)
    return delta


def vnd_improve(solution, lists, instance=None, trace=None):
    """
    Descend through the ten neighborhoods until none improves.

    Improves `solution` in place and returns it. After any accepted move the
    sweep restarts at the first neighborhood.
    """
    if instance is not None and instance is not solution.instance:
        raise HgampError("solution does not belong to the given instance")
    if not solution.feasible:
        raise HgampError("local search needs a feasible solution, repair it first")

    solution.prune_empty()
    solution.open_empty.clear()
    solution.refresh()

    state = SearchState(solution, lists)
    improved = True
    while improved:
        improved = False
        for kind, scope in NEIGHBORHOODS:
            plan = state.first_improvement(kind, scope, trace)
            if plan is not None:
                state.apply(plan)
                improved = True
                break
    return solution
