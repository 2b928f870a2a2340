import numpy as np
import pytest

from coversol import samples, spectral
from coversol.groups import sl2_chain
from coversol.tower import VoltageAssignment, WeightedGraph, build_tower


@pytest.fixture(scope="session")
def loop3():
    return samples.loop_tower(3)


@pytest.fixture(scope="session")
def loop3_spectra(loop3):
    return spectral.tower_spectra(loop3)


@pytest.fixture(scope="session")
def square():
    return samples.square_tower()


@pytest.fixture(scope="session")
def sl2_tower2():
    base = WeightedGraph.from_lists(1, [(0, 0, 1), (0, 0, 1)])
    return build_tower(base, VoltageAssignment(["S", "T"]), sl2_chain(2))


@pytest.fixture(scope="session")
def sl2_spectra2(sl2_tower2):
    return spectral.tower_spectra(sl2_tower2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
