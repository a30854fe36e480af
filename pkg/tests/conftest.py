import pytest

from graphfront.bistable import make_cubic
from graphfront.evolve import SolverParams, limit_profile
from graphfront.graph import star_graph


class RunRegistry:
    """Memoizes expensive runs so test modules and acceptance share them."""

    def __init__(self):
        self._cache = {}

    def get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    def profiles(self):
        from graphfront.evolve import LimitProfile
        return {k: v for k, v in self._cache.items() if isinstance(v, LimitProfile)}


@pytest.fixture(scope="session")
def registry():
    return RunRegistry()


@pytest.fixture(scope="session")
def b25():
    return make_cubic(0.25)


@pytest.fixture(scope="session")
def fast_params():
    return SolverParams(h=0.05)


@pytest.fixture(scope="session")
def acc_params():
    return SolverParams(h=0.02)


def star_profile(registry, b, n_or_thicknesses, source=1, h=0.05, truncation=40.0):
    key = f"star{n_or_thicknesses}-src{source}-h{h}-X{truncation}"
    return registry.get(key, lambda: limit_profile(
        star_graph(n_or_thicknesses, truncation=truncation), b, source,
        SolverParams(h=h)))


@pytest.fixture(scope="session")
def star3_fast(registry, b25):
    return star_profile(registry, b25, 3)


@pytest.fixture(scope="session")
def star6_fast(registry, b25):
    return star_profile(registry, b25, 6)
