"""Test toy instance generation."""

import pytest

from hgamp.generate import gen_tiny
from hgamp.model import SCALED_INTEGER


def test_same_seed_same_instance():
    assert gen_tiny(6, 2, 5) == gen_tiny(6, 2, 5)
    assert gen_tiny(6, 2, 5) != gen_tiny(6, 2, 6)


@pytest.mark.parametrize(("n", "m", "seed"), [(1, 1, 0), (6, 2, 3), (8, 3, 11)])
def test_shape_and_capacities(n, m, seed):
    inst = gen_tiny(n, m, seed)

    assert inst.name == f"tiny-{n}-{m}-{seed}"
    assert inst.n == n
    assert inst.m == m
    assert inst.convention.kind == SCALED_INTEGER
    assert inst.convention.factor == 1
    assert inst.exact
    assert all(1 <= c.demand <= 10 for c in inst.customers)
    assert max(c.demand for c in inst.customers) <= inst.vehicle_capacity
    assert inst.total_capacity >= inst.total_demand
    assert all(50 <= o <= 300 for o in inst.opening)
    assert 10 <= inst.vehicle_fixed_cost <= 50


@pytest.mark.parametrize(("n", "m"), [(0, 2), (3, 0)])
def test_rejects_empty(n, m):
    with pytest.raises(ValueError):
        gen_tiny(n, m, 0)
