import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

from thermal_gesture.models.mmv import MmvNetwork, TernaryConnectivity
from thermal_gesture.models.thermal import FRAME_WIDTH
from thermal_gesture.services.synthetic import SceneGenerator


def make_network(input_conn, recurrent_conn, periods, readout_weights, readout_bias) -> MmvNetwork:
    return MmvNetwork(
        connectivity=TernaryConnectivity(
            input_conn=np.asarray(input_conn), recurrent_conn=np.asarray(recurrent_conn)
        ),
        periods=np.asarray(periods),
        readout_weights=np.asarray(readout_weights, dtype=float),
        readout_bias=np.asarray(readout_bias, dtype=float),
    )


@pytest.fixture
def temp_dir():
    """Provide a temporary directory for test files"""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path)


@pytest.fixture
def scene():
    """Seeded generator with the default background noise"""
    return SceneGenerator(seed=7)


@pytest.fixture
def quiet_scene():
    """Noise-free generator"""
    return SceneGenerator(seed=3, noise_sigma=0.0)


@pytest.fixture
def threshold_detector():
    """One neuron listening to every column with period 1; gesture iff it fires at least once"""
    return make_network(
        input_conn=np.ones((FRAME_WIDTH, 1)),
        recurrent_conn=np.zeros((1, 1)),
        periods=[1],
        readout_weights=[[-1.0, 1.0]],
        readout_bias=[0.5, -0.5],
    )


@pytest.fixture
def never_detector():
    return make_network(
        input_conn=np.zeros((FRAME_WIDTH, 1)),
        recurrent_conn=np.zeros((1, 1)),
        periods=[1],
        readout_weights=[[0.0, 0.0]],
        readout_bias=[1.0, 0.0],
    )


@pytest.fixture
def always_detector():
    return make_network(
        input_conn=np.zeros((FRAME_WIDTH, 1)),
        recurrent_conn=np.zeros((1, 1)),
        periods=[1],
        readout_weights=[[0.0, 0.0]],
        readout_bias=[0.0, 1.0],
    )
