import numpy as np
import pytest

from stokesdarcy import Problem


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)


_cache = {}


@pytest.fixture(scope="session")
def problem_cache():
    def get(pair, n):
        if (pair, n) not in _cache:
            _cache[pair, n] = Problem(pair, n)
        return _cache[pair, n]
    return get


@pytest.fixture(scope="session")
def mini8(problem_cache):
    return problem_cache("mini", 8)


@pytest.fixture(scope="session")
def th8(problem_cache):
    return problem_cache("th", 8)


@pytest.fixture(scope="session")
def iso8(problem_cache):
    return problem_cache("iso", 8)
