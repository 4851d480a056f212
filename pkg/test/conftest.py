import sys
import os
import pytest
import numpy as np
from typing import List

sys.path.append(os.path.abspath(os.path.join(
    os.path.dirname(__file__), '..')))

from app.models.network import NetworkGraph  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the Monte-Carlo acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def cycle(n: int) -> NetworkGraph:
    return NetworkGraph(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n: int) -> NetworkGraph:
    return NetworkGraph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def random_tree(n: int, rng: np.random.Generator) -> NetworkGraph:
    return NetworkGraph(n, [(int(rng.integers(i)), i) for i in range(1, n)])


def small_random_graphs(count: int, seed: int, max_n: int = 8) -> List[NetworkGraph]:
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(count):
        n = int(rng.integers(2, max_n + 1))
        graphs.append(NetworkGraph.generate_erdos_renyi(n, float(rng.uniform(0.1, 0.6)), rng))
    return graphs


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


@pytest.fixture
def single_edge() -> NetworkGraph:
    return NetworkGraph(2, [(0, 1)])


@pytest.fixture
def triangle() -> NetworkGraph:
    return complete(3)


@pytest.fixture
def path3() -> NetworkGraph:
    return NetworkGraph(3, [(0, 1), (1, 2)])


@pytest.fixture
def isolated3() -> NetworkGraph:
    return NetworkGraph(3)


@pytest.fixture
def star4() -> NetworkGraph:
    return NetworkGraph(5, [(0, k) for k in range(1, 5)])


@pytest.fixture
def c4() -> NetworkGraph:
    return cycle(4)


@pytest.fixture
def k4() -> NetworkGraph:
    return complete(4)
