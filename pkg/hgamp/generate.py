"""Reproducible toy instances for tests and the exact oracle."""

import math

import numpy as np

from hgamp.format import build_instance
from hgamp.model import SCALED_INTEGER, Convention, CustomerSpec, DepotSpec

GRID = 100


def gen_tiny(n, m, seed):
    """
    Generate an integer-cost instance with `n` customers and `m` depots.

    Coordinates lie on a 100x100 grid and distances are rounded up under the
    scaled-integer(1) convention. Every depot can hold at least an equal share
    of the total demand, so the instance is always feasible.
    """
    if n < 1 or m < 1:
        raise ValueError(f"need at least one customer and one depot, got n={n}, m={m}")

    rng = np.random.default_rng(seed)
    depot_xy = rng.integers(0, GRID + 1, size=(m, 2))
    customer_xy = rng.integers(0, GRID + 1, size=(n, 2))
    demands = [int(d) for d in rng.integers(1, 11, size=n)]

    total = sum(demands)
    largest = max(demands)
    q = int(rng.integers(largest, max(largest, math.ceil(total / 2)) + 1))
    capacities = [int(w) for w in rng.integers(math.ceil(total / m), total + 1, size=m)]
    opening = [int(o) for o in rng.integers(50, 301, size=m)]
    fixed = int(rng.integers(10, 51))

    depots = [
        DepotSpec(i, capacities[i], opening[i], int(depot_xy[i, 0]), int(depot_xy[i, 1]))
        for i in range(m)
    ]
    customers = [
        CustomerSpec(j, demands[j], int(customer_xy[j, 0]), int(customer_xy[j, 1]))
        for j in range(n)
    ]
    return build_instance(
        f"tiny-{n}-{m}-{seed}",
        depots,
        customers,
        q,
        fixed,
        Convention(SCALED_INTEGER, 1),
    )
