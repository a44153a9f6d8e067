"""Problem and solution data model with cost accounting."""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from hgamp.exceptions import (
    HgampError,
    InstanceValidationError,
    StructuralError,
)
from hgamp.utils import costs_equal

EXACT_REAL = "exact-real"
SCALED_INTEGER = "scaled-integer"


@dataclass(frozen=True)
class Convention:
    """How travel costs are derived from coordinates."""

    kind: str = EXACT_REAL
    factor: int = 1

    @classmethod
    def parse(cls, token):
        """
        Parse a convention token.

        Accepted forms are `exact-real` (alias `real`) and
        `scaled-integer:<factor>` (alias `int:<factor>`).
        """
        token = str(token).strip().lower()
        if token in (EXACT_REAL, "real"):
            return cls(EXACT_REAL, 1)

        kind, _, factor = token.partition(":")
        if kind in (SCALED_INTEGER, "int"):
            try:
                value = int(factor or 1)
            except ValueError as e:
                raise InstanceValidationError("convention", f"bad factor '{factor}'") from e
            if value <= 0:
                raise InstanceValidationError("convention", "factor must be positive")
            return cls(SCALED_INTEGER, value)

        raise InstanceValidationError("convention", f"unknown convention '{token}'")

    @property
    def integral(self):
        return self.kind == SCALED_INTEGER

    def apply(self, euclidean):
        if self.integral:
            return np.ceil(euclidean * self.factor).astype(np.int64)
        return euclidean

    def __str__(self):
        if self.integral:
            return f"{SCALED_INTEGER}:{self.factor}"
        return EXACT_REAL


@dataclass(frozen=True)
class DepotSpec:
    id: int
    capacity: float
    opening_cost: float
    x: float = None
    y: float = None


@dataclass(frozen=True)
class CustomerSpec:
    id: int
    demand: float
    x: float = None
    y: float = None


class DistanceMatrix:
    """Dense travel-cost matrix over depots first, then customers."""

    def __init__(self, entries, symmetric=None):
        arr = np.asarray(entries)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InstanceValidationError("distances", f"matrix must be square, got {arr.shape}")
        if np.any(np.diag(arr) != 0):
            raise InstanceValidationError("distances", "diagonal must be zero")
        if np.any(arr < 0):
            raise InstanceValidationError("distances", "entries must be nonnegative")

        is_symmetric = bool(np.array_equal(arr, arr.T))
        if symmetric and not is_symmetric:
            raise InstanceValidationError("distances", "declared symmetric but is not")

        self.entries = arr
        self.symmetric = is_symmetric if symmetric is None else bool(symmetric)
        # plain lists keep scalar lookups in the search loops cheap
        self.rows = arr.tolist()

    @classmethod
    def from_points(cls, points, convention):
        pts = np.asarray(points, dtype=float)
        diff = pts[:, None, :] - pts[None, :, :]
        euclidean = np.sqrt((diff**2).sum(axis=-1))
        return cls(convention.apply(euclidean), symmetric=True)

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return self.symmetric == other.symmetric and np.array_equal(self.entries, other.entries)


class Instance:
    """
    A CLRP instance.

    Vertices are numbered depots first (`0..m-1`) and customers after
    (`m..m+n-1`); all routes and neighbor lists use these vertex ids.
    """

    def __init__(
        self,
        name,
        depots,
        customers,
        vehicle_capacity,
        vehicle_fixed_cost,
        distances,
        convention=None,
    ):
        self.name = name
        self.depots = list(depots)
        self.customers = list(customers)
        self.vehicle_capacity = vehicle_capacity
        self.vehicle_fixed_cost = vehicle_fixed_cost
        self.distances = distances
        self.convention = convention or Convention()
        self._validate()

        self.m = len(self.depots)
        self.n = len(self.customers)
        self.demand = [0] * self.m + [c.demand for c in self.customers]
        self.capacity = [d.capacity for d in self.depots]
        self.opening = [d.opening_cost for d in self.depots]
        self.total_demand = sum(c.demand for c in self.customers)
        self.total_capacity = sum(self.capacity)
        self.c = distances.rows

    def _validate(self):
        if not self.depots:
            raise InstanceValidationError("depots", "at least one depot is required")
        if not self.customers:
            raise InstanceValidationError("customers", "at least one customer is required")
        if self.vehicle_capacity <= 0:
            raise InstanceValidationError("vehicle_capacity", "must be positive")
        if self.vehicle_fixed_cost < 0:
            raise InstanceValidationError("vehicle_fixed_cost", "must be nonnegative")

        for d in self.depots:
            if d.capacity <= 0:
                raise InstanceValidationError(f"depots[{d.id}].capacity", "must be positive")
            if d.opening_cost < 0:
                raise InstanceValidationError(f"depots[{d.id}].opening_cost", "must be >= 0")

        for c in self.customers:
            if c.demand <= 0:
                raise InstanceValidationError(f"customers[{c.id}].demand", "must be positive")
            if c.demand > self.vehicle_capacity:
                raise InstanceValidationError(
                    f"customers[{c.id}].demand",
                    f"{c.demand} exceeds vehicle capacity {self.vehicle_capacity}",
                )

        size = len(self.depots) + len(self.customers)
        if len(self.distances) != size:
            raise InstanceValidationError(
                "distances", f"expected a {size}x{size} matrix, got {len(self.distances)}"
            )

    @property
    def customer_vertices(self):
        return range(self.m, self.m + self.n)

    def is_depot(self, v):
        return v < self.m

    def vertex(self, customer_index):
        return self.m + customer_index

    def customer_index(self, v):
        return v - self.m

    @property
    def exact(self):
        """True when every cost component is integral, so sums compare exactly."""
        return (
            self.convention.integral
            and float(self.vehicle_fixed_cost).is_integer()
            and all(float(o).is_integer() for o in self.opening)
        )

    @property
    def uncapacitated_depots(self):
        return all(w >= self.total_demand for w in self.capacity)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self.depots == other.depots
            and self.customers == other.customers
            and self.vehicle_capacity == other.vehicle_capacity
            and self.vehicle_fixed_cost == other.vehicle_fixed_cost
            and self.convention == other.convention
            and self.distances == other.distances
        )

    def __repr__(self):
        return f"Instance({self.name}, m={self.m}, n={self.n})"


@dataclass(frozen=True)
class DepotConfiguration:
    """A canonical (sorted, deduplicated) set of opened depots."""

    open: tuple
    total_capacity: float

    @classmethod
    def of(cls, instance, depots):
        opened = tuple(sorted(set(depots)))
        for i in opened:
            if not 0 <= i < instance.m:
                raise InstanceValidationError("depot_config", f"unknown depot {i}")
        return cls(opened, sum(instance.capacity[i] for i in opened))

    def covers(self, instance):
        return self.total_capacity >= instance.total_demand

    def __contains__(self, depot):
        return depot in self.open

    def __len__(self):
        return len(self.open)

    def __str__(self):
        return "{" + ",".join(str(i) for i in self.open) + "}"


class Route:
    """One vehicle tour `depot -> customers... -> depot` with cached load and length."""

    __slots__ = ("depot", "customers", "load", "length")

    def __init__(self, depot, customers, instance=None):
        self.depot = depot
        self.customers = list(customers)
        self.load = 0
        self.length = 0
        if instance is not None:
            self.refresh(instance)

    def refresh(self, instance):
        c = instance.c
        demand = instance.demand
        load = 0
        length = 0
        prev = self.depot
        for v in self.customers:
            load += demand[v]
            length += c[prev][v]
            prev = v
        if self.customers:
            length += c[prev][self.depot]
        self.load = load
        self.length = length

    def edges(self):
        if not self.customers:
            return []
        seq = [self.depot, *self.customers, self.depot]
        return [(seq[k], seq[k + 1]) for k in range(len(seq) - 1)]

    def copy(self):
        route = Route(self.depot, self.customers)
        route.load = self.load
        route.length = self.length
        return route

    def __repr__(self):
        return f"Route({self.depot}: {self.customers})"


class Solution:
    """
    A set of routes over one instance.

    Cached values (`cost`, `f_l`, `f_r`, `depot_load`) are only valid after
    `refresh()`; every operation that edits routes calls it, or keeps the
    caches in step incrementally.
    """

    def __init__(self, instance, routes=(), open_empty=()):
        self.instance = instance
        self.routes = list(routes)
        self.open_empty = set(open_empty)
        self.refresh()

    @classmethod
    def from_sequences(cls, instance, sequences, open_empty=()):
        routes = [Route(depot, customers, instance) for depot, customers in sequences]
        return cls(instance, routes, open_empty)

    def refresh(self):
        inst = self.instance
        self.depot_load = [0] * inst.m
        for route in self.routes:
            route.refresh(inst)
            self.depot_load[route.depot] += route.load
        self.recount()

    def recount(self):
        """Recompute totals from the (already valid) route caches."""
        inst = self.instance
        used = {r.depot for r in self.routes}
        self.open_empty -= used
        opened = used | self.open_empty
        self.cost = (
            sum(inst.opening[i] for i in opened)
            + inst.vehicle_fixed_cost * len(self.routes)
            + sum(r.length for r in self.routes)
        )
        self.f_l = sum(max(0, self.depot_load[i] - inst.capacity[i]) for i in range(inst.m))
        self.f_r = sum(max(0, r.load - inst.vehicle_capacity) for r in self.routes)
        self._signature = None

    def prune_empty(self):
        self.routes = [r for r in self.routes if r.customers]

    @property
    def opened(self):
        return sorted({r.depot for r in self.routes} | self.open_empty)

    @property
    def depot_config(self):
        return DepotConfiguration.of(self.instance, self.opened)

    @property
    def feasible(self):
        return self.f_l == 0 and self.f_r == 0

    def visits(self):
        return Counter(v for r in self.routes for v in r.customers)

    def assignment(self):
        return {v: r.depot for r in self.routes for v in r.customers}

    def signature(self):
        """Undirected edge multiset and customer-to-depot assignment, cached."""
        if self._signature is None:
            edges = Counter()
            for r in self.routes:
                for u, v in r.edges():
                    edges[(u, v) if u <= v else (v, u)] += 1
            self._signature = (edges, self.assignment())
        return self._signature

    def sequences(self):
        return [(r.depot, list(r.customers)) for r in self.routes]

    def copy(self):
        clone = Solution.__new__(Solution)
        clone.instance = self.instance
        clone.routes = [r.copy() for r in self.routes]
        clone.open_empty = set(self.open_empty)
        clone.depot_load = list(self.depot_load)
        clone.cost = self.cost
        clone.f_l = self.f_l
        clone.f_r = self.f_r
        clone._signature = self._signature
        return clone

    def __repr__(self):
        return f"Solution(cost={self.cost}, routes={len(self.routes)}, depots={self.opened})"


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    f_l: float
    f_r: float
    structural: tuple = ()


def _visitation_problems(solution, instance):
    visits = solution.visits()
    problems = []
    for v in instance.customer_vertices:
        count = visits.get(v, 0)
        if count != 1:
            problems.append(f"customer {instance.customer_index(v)} visited {count} times")
    for v in visits:
        if not instance.m <= v < instance.m + instance.n:
            problems.append(f"route visits non-customer vertex {v}")
    for r in solution.routes:
        if not 0 <= r.depot < instance.m:
            problems.append(f"route owned by unknown depot {r.depot}")
    return problems


def total_cost(solution, instance):
    """
    Recompute the objective from scratch.

    :raises StructuralError: if a customer is not visited exactly once.
    """
    problems = _visitation_problems(solution, instance)
    if problems:
        raise StructuralError("; ".join(problems))

    c = instance.c
    opened = {r.depot for r in solution.routes} | set(solution.open_empty)
    travel = 0
    for r in solution.routes:
        seq = [r.depot, *r.customers, r.depot]
        travel += sum(c[seq[k]][seq[k + 1]] for k in range(len(seq) - 1))
    return (
        sum(instance.opening[i] for i in opened)
        + instance.vehicle_fixed_cost * len(solution.routes)
        + travel
    )


def check_feasibility(solution, instance):
    problems = _visitation_problems(solution, instance)

    depot_load = [0] * instance.m
    f_r = 0
    for r in solution.routes:
        load = sum(instance.demand[v] for v in r.customers if v < len(instance.demand))
        if 0 <= r.depot < instance.m:
            depot_load[r.depot] += load
        f_r += max(0, load - instance.vehicle_capacity)
    f_l = sum(max(0, depot_load[i] - instance.capacity[i]) for i in range(instance.m))

    return Feasibility(
        feasible=not problems and f_l == 0 and f_r == 0,
        f_l=f_l,
        f_r=f_r,
        structural=tuple(problems),
    )


def broken_pairs_distance(a, b):
    """
    Count differing undirected edges (halved, rounded up) plus customers served from another depot.

    Zero exactly when both solutions share edge multisets and assignments.
    """
    if a.instance is not b.instance and a.instance != b.instance:
        raise HgampError("solutions belong to different instances")

    edges_a, assign_a = a.signature()
    edges_b, assign_b = b.signature()
    diff = 0
    for e in edges_a.keys() | edges_b.keys():
        diff += abs(edges_a.get(e, 0) - edges_b.get(e, 0))
    moved = sum(1 for v, depot in assign_a.items() if assign_b.get(v) != depot)
    return (diff + 1) // 2 + moved


def compact_degree(solution, instance):
    """Total demand as a percentage of the opened depot capacity."""
    opened = solution.opened
    if not opened:
        raise HgampError("compact degree needs at least one opened depot")
    return 100.0 * instance.total_demand / sum(instance.capacity[i] for i in opened)


def group_compact_degree(values):
    values = list(values)
    if not values:
        raise HgampError("no compact degree values to average")
    return float(np.mean(values))


def objective_matches(stored, recomputed, instance):
    return costs_equal(stored, recomputed, exact=instance.exact)
