import numpy as np
import pytest

from illgswitch.acceptance import _bundled


@pytest.fixture(scope="session")
def case1():
    return _bundled("case1.ini").resolve()


@pytest.fixture(scope="session")
def case2():
    return _bundled("case2.ini").resolve()


@pytest.fixture
def rng():
    return np.random.default_rng(7)
