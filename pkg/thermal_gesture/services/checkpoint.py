"""Versioned text checkpoints for MMV networks

Layout, one item per line:

    mmv-v1 C K w_tw
    <C integer periods>
    <run-length encoded input connectivity over E/I/N, row-major>
    <run-length encoded recurrent connectivity over E/I/N, row-major>
    <C*K readout weights, row-major>
    <K readout biases>
"""
import logging
import re
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from thermal_gesture.models.mmv import MmvNetwork, Synapse, TernaryConnectivity
from thermal_gesture.services.errors import CheckpointError, MmvError

logger = logging.getLogger(__name__)

FORMAT_TAG = "mmv-v1"
_RUN = re.compile(r"(\d+)([EIN])")


def rle_encode(matrix: np.ndarray) -> str:
    """`3E1N2I` style run-length encoding of a ternary matrix"""
    symbols = [Synapse(int(value)).symbol for value in np.asarray(matrix).ravel()]
    runs: List[str] = []
    i = 0
    while i < len(symbols):
        j = i
        while j < len(symbols) and symbols[j] == symbols[i]:
            j += 1
        runs.append(f"{j - i}{symbols[i]}")
        i = j
    return "".join(runs)


def rle_decode(text: str, shape: tuple) -> np.ndarray:
    text = text.strip()
    if _RUN.sub("", text):
        raise CheckpointError(f"Invalid run-length string near '{_RUN.sub('', text)[:20]}'")
    values: List[int] = []
    for count, symbol in _RUN.findall(text):
        values.extend([int(Synapse.from_symbol(symbol))] * int(count))
    expected = int(np.prod(shape))
    if len(values) != expected:
        raise CheckpointError(f"Run-length string decodes to {len(values)} entries, expected {expected}")
    return np.array(values, dtype=np.int8).reshape(shape)


def _floats(values: np.ndarray) -> str:
    return " ".join(repr(float(value)) for value in np.asarray(values).ravel())


def _parse_numbers(line: str, count: int, kind, what: str) -> np.ndarray:
    tokens = line.split()
    if len(tokens) != count:
        raise CheckpointError(f"Expected {count} {what}, found {len(tokens)}")
    try:
        return np.array([kind(token) for token in tokens])
    except ValueError as e:
        raise CheckpointError(f"Unparsable {what}: {e}")


def save_checkpoint(net: MmvNetwork, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"{FORMAT_TAG} {net.neurons} {net.num_classes} {net.input_width}",
        " ".join(str(int(period)) for period in net.periods),
        rle_encode(net.connectivity.input_conn),
        rle_encode(net.connectivity.recurrent_conn),
        _floats(net.readout_weights),
        _floats(net.readout_bias),
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Saved {net.neurons}-neuron checkpoint to {path}")
    return path


def load_checkpoint(path: Union[str, Path], time_steps: Optional[int] = None) -> MmvNetwork:
    """Read an `mmv-v1` checkpoint

    With `time_steps` given, periods longer than the run are rejected.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").split("\n")
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}")
    if len(lines) < 6:
        raise CheckpointError(f"{path}: truncated checkpoint ({len(lines)} lines)")

    header = lines[0].split()
    if len(header) != 4 or header[0] != FORMAT_TAG:
        raise CheckpointError(f"{path}: expected '{FORMAT_TAG} C K w_tw' header, got '{lines[0]}'")
    try:
        neurons, classes, width = (int(value) for value in header[1:])
    except ValueError:
        raise CheckpointError(f"{path}: non-integer header fields '{lines[0]}'")

    periods = _parse_numbers(lines[1], neurons, int, "periods")
    input_conn = rle_decode(lines[2], (width, neurons))
    recurrent_conn = rle_decode(lines[3], (neurons, neurons))
    weights = _parse_numbers(lines[4], neurons * classes, float, "readout weights").reshape(neurons, classes)
    bias = _parse_numbers(lines[5], classes, float, "readout biases")

    try:
        net = MmvNetwork(
            connectivity=TernaryConnectivity(input_conn=input_conn, recurrent_conn=recurrent_conn),
            periods=periods,
            readout_weights=weights,
            readout_bias=bias,
        )
        if time_steps is not None:
            net.validate_periods(time_steps)
    except MmvError as e:
        raise CheckpointError(f"{path}: {e}")

    logger.info(f"Loaded {neurons}-neuron, {classes}-class checkpoint from {path}")
    return net
