import json
import random

import pytest

from quickvis.domain import load_domain

UNIT_SQUARE_1HOLE = {
    "outer": [[0, 0], [10, 0], [10, 10], [0, 10]],
    "holes": [[[4, 4], [6, 4], [6, 6], [4, 6]]],
    "source": [1, 1],
}

CONVEX = {
    "outer": [[0, 0], [8, 0], [11, 4], [7, 9], [1, 7]],
    "holes": [],
    "source": [4, 3],
}

LSHAPE = {  # simple polygon (h = 1) with a reflex corner
    "outer": [[0, 0], [10, 0], [10, 4], [5, 4], [5, 10], [0, 10]],
    "holes": [],
    "source": [1, 1],
}


def make_domain(spec):
    return load_domain(json.dumps(spec))


@pytest.fixture(scope="session")
def fixture_domain():
    return make_domain(UNIT_SQUARE_1HOLE)


@pytest.fixture(scope="session")
def convex_domain():
    return make_domain(CONVEX)


@pytest.fixture(scope="session")
def lshape_domain():
    return make_domain(LSHAPE)


@pytest.fixture()
def rng():
    return random.Random(12345)
