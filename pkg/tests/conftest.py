import math

import numpy as np
import pytest

from tomocheck.moment_engine import AnalyticSource
from tomocheck.quantum_state import GaussianState, StateDescriptor, make_state

TMSV_R = 0.4


@pytest.fixture
def vacuum():
    return make_state({"kind": "vacuum"})


@pytest.fixture
def tmsv():
    return make_state({"kind": "two_mode_squeezed", "params": {"r": TMSV_R}})


@pytest.fixture
def thermal():
    return make_state({"kind": "thermal", "params": {"nbar": 1.0}})


@pytest.fixture
def squeezed():
    return make_state({"kind": "squeezed", "params": {"r": 0.3, "phi": 0.4}})


@pytest.fixture
def displaced():
    return make_state({"kind": "product", "params": {
        "mode1": {"kind": "coherent", "params": {"alpha": [0.3, 0.2]}},
        "mode2": {"kind": "coherent", "params": {"alpha": [-0.5, 0.1]}},
    }})


@pytest.fixture
def vacuum_source(vacuum):
    return AnalyticSource(vacuum)


@pytest.fixture
def tmsv_source(tmsv):
    return AnalyticSource(tmsv)


@pytest.fixture
def tmsv_terms():
    """``(cosh 2r / 2, sinh 2r / 2)`` for the two-mode squeezed fixture."""
    return math.cosh(2 * TMSV_R) / 2, math.sinh(2 * TMSV_R) / 2


@pytest.fixture
def unphysical():
    return GaussianState(np.zeros(4), 0.2 * np.eye(4), StateDescriptor("custom"))
