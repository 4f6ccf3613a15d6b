import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rectiscan import DiscreteMeasure, GeneratorSpec, SpatialIndex, generate

settings.register_profile(
    "default", deadline=None, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def segment_2001():
    return generate(GeneratorSpec("segment", budget=2001, seed=0))


@pytest.fixture(scope="session")
def circle_10000():
    return generate(GeneratorSpec("circle", budget=10000, seed=0))


@pytest.fixture(scope="session")
def cantor_k5():
    return generate(GeneratorSpec("cantor4", budget=1024, seed=0,
                                  params={"K": 5}))


@pytest.fixture(scope="session")
def indexed_segment(segment_2001):
    return SpatialIndex(segment_2001)


@pytest.fixture(scope="session")
def indexed_circle(circle_10000):
    return SpatialIndex(circle_10000)


@pytest.fixture(scope="session")
def indexed_cantor(cantor_k5):
    return SpatialIndex(cantor_k5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_measure(points, weights=None, n=1, resolution=None) -> DiscreteMeasure:
    return DiscreteMeasure.create(np.asarray(points, dtype=float), weights,
                                  n=n, resolution=resolution)
