"""Shared fixtures."""

import pytest

from hgamp.generate import gen_tiny
from hgamp.localsearch import build_neighbor_lists
from hgamp.test.helpers import line_instance


@pytest.fixture
def line():
    return line_instance()


@pytest.fixture
def line_lists(line):
    return build_neighbor_lists(line, 2)


@pytest.fixture(params=[1, 2, 3])
def tiny(request):
    return gen_tiny(6, 2, request.param)
