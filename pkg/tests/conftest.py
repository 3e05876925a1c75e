import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import mirrorflow as mf


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def small_problem():
    """Five agents, three coordinates, euclidean geometry: the workhorse."""
    cost_set = mf.synthetic_quadratic_costset(5, 3, seed=7)
    graph = mf.random_connected_graph(5, 0.3, seed=7)
    dgf = mf.euclidean_dgf(3)
    return cost_set, graph, dgf


@pytest.fixture(scope="session")
def data_dir():
    return Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def configs_dir():
    return Path(__file__).resolve().parent.parent / "configs"
