"""Event-driven inference for MMV timer-neuron networks"""
import logging
from typing import Tuple

import numpy as np
from scipy.special import expit

from thermal_gesture.models.mmv import MmvNetwork, MmvState
from thermal_gesture.models.thermal import SpikeRaster, ThermalWindow
from thermal_gesture.models.track import GestureClass
from thermal_gesture.services.errors import MmvError
from thermal_gesture.services.thermal_io import encode_window

logger = logging.getLogger(__name__)


class WidthMismatchError(MmvError):
    """Exception raised when an input vector does not match the network's input width"""
    pass


class DetectorShapeError(MmvError):
    """Exception raised when a network has the wrong number of readout classes for a task"""
    pass


def _gate_inputs(net: MmvNetwork, input_spikes: np.ndarray, recurrent_spikes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """OR together every active line wired to each neuron's EXC and INH inputs"""
    masks = net.masks
    exc = (input_spikes @ masks.exc_in + recurrent_spikes @ masks.exc_rec) > 0
    inh = (input_spikes @ masks.inh_in + recurrent_spikes @ masks.inh_rec) > 0
    return exc, inh


def step(net: MmvNetwork, state: MmvState, input_spikes: np.ndarray) -> Tuple[MmvState, np.ndarray]:
    """Advance every neuron by one clock tick

    Per neuron, in order: a triggered neuron seeing INH resets silently;
    otherwise a triggered neuron counts up and, on reaching its period,
    emits and resets. A neuron that is idle after this (including one that
    has just emitted) becomes triggered when it sees EXC. Recurrent spikes
    arrive with a one-step delay.
    """
    input_spikes = np.asarray(input_spikes).reshape(-1).astype(np.int32)
    if input_spikes.shape[0] != net.input_width:
        raise WidthMismatchError(
            f"Input has {input_spikes.shape[0]} lines, network expects {net.input_width}"
        )

    exc, inh = _gate_inputs(net, input_spikes, state.last_output.astype(np.int32))

    triggered = state.triggered.copy()
    counters = state.counters.copy()

    inhibited = triggered & inh
    running = triggered & ~inh
    counters[running] += 1
    fired = running & (counters >= net.periods)

    done = inhibited | fired
    triggered[done] = False
    counters[done] = 0

    # idle neurons pick up EXC; an inhibited neuron waits for the next step
    start = exc & ~triggered & ~inhibited
    triggered[start] = True
    counters[start] = 0

    output = fired.astype(np.uint8)
    return MmvState(counters=counters, triggered=triggered, last_output=output), output


def simulate(net: MmvNetwork, raster: SpikeRaster) -> np.ndarray:
    """Full output trace, shape T_steps x C, starting from a zeroed state"""
    if raster.channels != net.input_width:
        raise WidthMismatchError(
            f"Raster has {raster.channels} channels, network expects {net.input_width}"
        )
    state = MmvState.zeros(net.neurons)
    trace = np.zeros((raster.time_steps, net.neurons), dtype=np.uint8)
    for t in range(raster.time_steps):
        state, trace[t] = step(net, state, raster.bits[t])
    return trace


def run(net: MmvNetwork, raster: SpikeRaster) -> np.ndarray:
    """Per-neuron spike counts over one window"""
    return simulate(net, raster).sum(axis=0, dtype=np.int64)


def readout(counts: np.ndarray, net: MmvNetwork) -> np.ndarray:
    """Independent sigmoid probabilities, one per class"""
    counts = np.asarray(counts, dtype=np.float64)
    return expit(counts @ net.readout_weights + net.readout_bias)


def detect(net: MmvNetwork, window: ThermalWindow, theta_s: float) -> bool:
    """Wake-up decision for one window; ties mean no gesture"""
    if net.num_classes != 2:
        raise DetectorShapeError(f"Detector must have 2 readout classes, got {net.num_classes}")
    probs = readout(run(net, encode_window(window, theta_s)), net)
    present = bool(probs[1] > probs[0])
    logger.debug(f"Window {window.end_index}: p={probs.tolist()} present={present}")
    return present


def classify_window(net: MmvNetwork, window: ThermalWindow, theta_s: float) -> GestureClass:
    """Per-window 5-class decision for the MMV-only baseline; ties go to the lower index"""
    if net.num_classes != len(GestureClass):
        raise DetectorShapeError(
            f"Window classifier must have {len(GestureClass)} readout classes, got {net.num_classes}"
        )
    probs = readout(run(net, encode_window(window, theta_s)), net)
    return GestureClass.from_index(int(np.argmax(probs)))
