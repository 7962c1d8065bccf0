import numpy as np
import pytest

from beliefplan.context import load_world
from beliefplan.executive import load_domain, make_planner


@pytest.fixture(scope="session")
def model():
    return load_world()


@pytest.fixture(scope="session")
def schemas():
    return load_domain()


@pytest.fixture(scope="session")
def planner(model):
    return make_planner(model)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
