import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def example_state():
    from phasetomo.states import DensityMatrix

    return DensityMatrix(np.diag([0.5, 0.3, 0.2]))
