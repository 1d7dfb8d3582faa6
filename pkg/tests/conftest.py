from functools import lru_cache

import pytest

from rspin.hierarchy import solve
from rspin.potentials import OpenPotentials
from rspin.verify import _pipelines, default_fit_weight


@lru_cache(maxsize=None)
def solution(r, W):
    return solve(r, W)


@lru_cache(maxsize=None)
def potentials(r, W):
    return OpenPotentials.compute(r, W)


@lru_cache(maxsize=None)
def pipelines(r, W):
    """Pipeline A at the fit weight, plus the pipeline-B base seeded from it."""
    fw = default_fit_weight(r, W)
    return _pipelines(r, W, potentials(r, fw), fw, None)


@pytest.fixture(scope="session")
def sol2():
    return solution(2, 10)


@pytest.fixture(scope="session")
def sol3():
    return solution(3, 9)


@pytest.fixture(scope="session")
def pots2():
    return potentials(2, 10)


@pytest.fixture(scope="session")
def pots3():
    return potentials(3, 9)
