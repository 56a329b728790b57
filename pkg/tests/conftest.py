import numpy as np
import pytest

from mooney_sla import MaterialParams


@pytest.fixture
def params():
    return MaterialParams(s1=1.0, s2=-0.3, beta=100.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
