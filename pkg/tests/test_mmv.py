import numpy as np
import pytest

from tests.conftest import make_network
from thermal_gesture.models.mmv import ConnectivityError, MmvState, Synapse
from thermal_gesture.models.thermal import FRAME_PIXELS, SpikeRaster, ThermalWindow
from thermal_gesture.models.track import GestureClass
from thermal_gesture.services.errors import MmvError
from thermal_gesture.services.mmv import (
    DetectorShapeError,
    WidthMismatchError,
    classify_window,
    detect,
    readout,
    run,
    simulate,
    step,
)


def _single(period, input_column=(Synapse.EXC,), width=2):
    conn = np.zeros((width, 1))
    conn[: len(input_column), 0] = input_column
    return make_network(conn, np.zeros((1, 1)), [period], [[0.0, 1.0]], [0.0, 0.0])


def _raster(rows, width=2):
    bits = np.zeros((len(rows), width), dtype=np.uint8)
    for t, columns in enumerate(rows):
        for c in columns:
            bits[t, c] = 1
    return SpikeRaster(bits=bits)


def test_period_three_fires_three_steps_after_trigger():
    net = _single(3)
    trace = simulate(net, _raster([[0], [], [], [], []]))
    assert trace[:, 0].tolist() == [0, 0, 0, 1, 0]


def test_inhibition_resets_without_spike():
    net = _single(3, input_column=(Synapse.EXC, Synapse.INH))
    trace = simulate(net, _raster([[0], [1], [], [], [], []]))
    assert not trace.any()


def test_inhibition_wins_over_excitation_in_same_step():
    net = _single(2, input_column=(Synapse.EXC, Synapse.INH))
    state = MmvState.zeros(1)
    state, _ = step(net, state, np.array([1, 0]))
    assert state.triggered[0]
    state, out = step(net, state, np.array([1, 1]))
    assert out[0] == 0
    assert not state.triggered[0]
    assert state.counters[0] == 0


def test_inhibition_on_idle_neuron_is_ignored():
    net = _single(1, input_column=(Synapse.EXC, Synapse.INH))
    trace = simulate(net, _raster([[1], [0], []]))
    assert trace[:, 0].tolist() == [0, 0, 1]


def test_silent_input_never_fires():
    net = _single(1)
    trace = simulate(net, SpikeRaster(bits=np.zeros((96, 2), dtype=np.uint8)))
    assert trace.shape == (96, 1)
    assert not trace.any()


def test_constant_drive_period_one():
    net = _single(1)
    counts = run(net, SpikeRaster(bits=np.tile([1, 0], (96, 1))))
    # trigger at step 0, then fire and re-trigger every step
    assert counts.tolist() == [95]


def test_recurrent_spikes_arrive_one_step_later():
    input_conn = [[1, 0], [0, 0]]
    recurrent = [[0, 1], [0, 0]]  # neuron 0 excites neuron 1
    net = make_network(input_conn, recurrent, [1, 1], np.zeros((2, 2)), [0.0, 0.0])
    trace = simulate(net, _raster([[0], [], [], [], []]))
    assert trace[:, 0].tolist() == [0, 1, 0, 0, 0]
    assert trace[:, 1].tolist() == [0, 0, 0, 1, 0]


def test_width_mismatch():
    net = _single(1)
    with pytest.raises(WidthMismatchError):
        step(net, MmvState.zeros(1), np.zeros(3))
    with pytest.raises(WidthMismatchError):
        simulate(net, SpikeRaster(bits=np.zeros((4, 3), dtype=np.uint8)))


def test_network_rejects_bad_connectivity():
    with pytest.raises(ConnectivityError):
        make_network([[2]], [[0]], [1], [[0.0, 0.0]], [0.0, 0.0])
    with pytest.raises(ConnectivityError):
        make_network([[1]], [[1]], [1], [[0.0, 0.0]], [0.0, 0.0])
    with pytest.raises(MmvError):
        make_network([[1]], [[0]], [0], [[0.0, 0.0]], [0.0, 0.0])


def test_readout_probabilities():
    net = _single(1)
    probs = readout(np.array([3]), net)
    assert probs[0] == pytest.approx(0.5)
    assert probs[1] == pytest.approx(0.9526, abs=1e-4)


def test_detect_tie_means_no_gesture():
    net = make_network(np.zeros((32, 1)), np.zeros((1, 1)), [1], [[0.0, 0.0]], [0.0, 0.0])
    window = ThermalWindow(rows=np.full((5, FRAME_PIXELS), 20.0), end_index=4)
    assert detect(net, window, 0.2) is False


def test_detect_and_classify_check_class_count(threshold_detector):
    window = ThermalWindow(rows=np.full((5, FRAME_PIXELS), 20.0), end_index=4)
    with pytest.raises(DetectorShapeError):
        classify_window(threshold_detector, window, 0.2)
    five = make_network(np.zeros((32, 1)), np.zeros((1, 1)), [1], np.zeros((1, 5)), [0, 0, 3, 0, 0])
    with pytest.raises(DetectorShapeError):
        detect(five, window, 0.2)
    assert classify_window(five, window, 0.2) is GestureClass.CIR_CCW


def test_threshold_detector_on_motion(threshold_detector, quiet_scene, scene):
    moving = np.stack([quiet_scene.background + quiet_scene.blob(6 + 3 * i, 12) for i in range(5)])
    static = np.stack(scene.static_frames(5))
    assert detect(threshold_detector, ThermalWindow(rows=moving.reshape(5, -1), end_index=4), 0.2)
    assert not detect(threshold_detector, ThermalWindow(rows=static.reshape(5, -1), end_index=4), 0.2)


def test_outputs_are_causal():
    rng = np.random.default_rng(0)
    input_conn = rng.integers(-1, 2, size=(8, 6))
    recurrent = rng.integers(-1, 2, size=(6, 6))
    np.fill_diagonal(recurrent, 0)
    net = make_network(input_conn, recurrent, rng.integers(1, 5, size=6), np.zeros((6, 2)), [0.0, 0.0])

    bits = (rng.random((40, 8)) < 0.3).astype(np.uint8)
    full = simulate(net, SpikeRaster(bits=bits))
    changed = bits.copy()
    changed[25:] = 1 - changed[25:]
    altered = simulate(net, SpikeRaster(bits=changed))
    assert np.array_equal(full[:25], altered[:25])
    # same input, same output
    assert np.array_equal(full, simulate(net, SpikeRaster(bits=bits)))


def test_idle_neuron_seeing_exc_and_inh_triggers():
    net = _single(2, input_column=(Synapse.EXC, Synapse.INH))
    state, out = step(net, MmvState.zeros(1), np.array([1, 1]))
    assert state.triggered[0]
    assert out[0] == 0
