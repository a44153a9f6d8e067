"""Instance and solution builders shared by the unit tests."""

import os

import numpy as np
import pytest

from hgamp.format import build_instance
from hgamp.model import Convention, CustomerSpec, DepotSpec, Solution

BENCHMARKS_DIR = os.path.join(os.path.dirname(__file__), "data", "benchmarks")


def benchmark_file(name):
    """Path of a benchmark instance, skipping the calling test when it is not shipped."""
    for candidate in (name, f"{name}.dat", f"coord{name}.dat", f"{name}.txt"):
        path = os.path.join(BENCHMARKS_DIR, candidate)
        if os.path.exists(path):
            return path
    pytest.skip(f"benchmark instance {name} not available under {BENCHMARKS_DIR}")


def line_instance(name="line"):
    # all points on the x axis, so every distance is an integer
    depots = [DepotSpec(0, 20, 100, 0, 0), DepotSpec(1, 20, 50, 10, 0)]
    customers = [
        CustomerSpec(0, 3, 1, 0),
        CustomerSpec(1, 4, 2, 0),
        CustomerSpec(2, 5, 9, 0),
    ]
    return build_instance(name, depots, customers, 10, 5, Convention.parse("scaled-integer:1"))


def roomy(instance):
    """The same instance with every depot able to serve all customers alone."""
    depots = [
        DepotSpec(d.id, instance.total_demand, d.opening_cost, d.x, d.y) for d in instance.depots
    ]
    return build_instance(
        instance.name,
        depots,
        instance.customers,
        instance.vehicle_capacity,
        instance.vehicle_fixed_cost,
        instance.convention,
    )


def two_clusters():
    # each depot holds 60% of the demand and sits next to its own pair of customers
    depots = [DepotSpec(0, 24, 100, 0, 0), DepotSpec(1, 24, 100, 100, 0)]
    customers = [
        CustomerSpec(0, 10, 1, 0),
        CustomerSpec(1, 10, 2, 0),
        CustomerSpec(2, 10, 99, 0),
        CustomerSpec(3, 10, 98, 0),
    ]
    return build_instance("clusters", depots, customers, 20, 10, Convention.parse("int:1"))


def random_solution(inst, rng):
    """Customers in random order, cut into random routes at random depots; capacity is ignored."""
    order = [int(v) for v in rng.permutation(list(inst.customer_vertices))]
    size = int(rng.integers(1, inst.n + 1))
    cuts = sorted(int(k) for k in rng.choice(np.arange(1, inst.n), size=size - 1, replace=False))
    pieces = [order[a:b] for a, b in zip([0, *cuts], [*cuts, inst.n])]
    return Solution.from_sequences(inst, [(int(rng.integers(inst.m)), p) for p in pieces])
