import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spcfr import games


@pytest.fixture(scope="session")
def kuhn():
    return games.build_kuhn()


@pytest.fixture(scope="session")
def kuhn_efg():
    return games.build_kuhn_efg()


@pytest.fixture(scope="session")
def leduc():
    return games.build_leduc()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
