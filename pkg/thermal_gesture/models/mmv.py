from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property

import numpy as np

from thermal_gesture.services.errors import MmvError


class ConnectivityError(MmvError):
    """Exception raised when a connectivity matrix is not strictly ternary"""
    pass


class Synapse(IntEnum):
    INH = -1
    NONE = 0
    EXC = 1

    @property
    def symbol(self) -> str:
        return {Synapse.EXC: "E", Synapse.INH: "I", Synapse.NONE: "N"}[self]

    @classmethod
    def from_symbol(cls, symbol: str) -> "Synapse":
        return {"E": cls.EXC, "I": cls.INH, "N": cls.NONE}[symbol]


def _ternary(matrix: np.ndarray, name: str) -> np.ndarray:
    matrix = np.array(matrix, copy=True)
    if matrix.ndim != 2:
        raise ConnectivityError(f"{name} must be 2-D, got shape {matrix.shape}")
    if not np.all(np.isin(matrix, (-1, 0, 1))):
        raise ConnectivityError(f"{name} entries must be EXC (+1), INH (-1) or NONE (0)")
    matrix = matrix.astype(np.int8)
    matrix.flags.writeable = False
    return matrix


@dataclass(frozen=True)
class TernaryConnectivity:
    input_conn: np.ndarray      # (w_tw, C)
    recurrent_conn: np.ndarray  # (C, C)

    def __post_init__(self):
        input_conn = _ternary(self.input_conn, "input_conn")
        recurrent_conn = _ternary(self.recurrent_conn, "recurrent_conn")
        neurons = input_conn.shape[1]
        if recurrent_conn.shape != (neurons, neurons):
            raise ConnectivityError(
                f"recurrent_conn must be {neurons}x{neurons}, got {recurrent_conn.shape}"
            )
        if np.any(np.diag(recurrent_conn) != Synapse.NONE):
            raise ConnectivityError("Self-recurrent synapses are not allowed")
        object.__setattr__(self, "input_conn", input_conn)
        object.__setattr__(self, "recurrent_conn", recurrent_conn)

    @property
    def input_width(self) -> int:
        return self.input_conn.shape[0]

    @property
    def neurons(self) -> int:
        return self.input_conn.shape[1]

    @property
    def synapse_count(self) -> int:
        return self.input_conn.size + self.recurrent_conn.size

    @property
    def connected_count(self) -> int:
        return int(np.count_nonzero(self.input_conn) + np.count_nonzero(self.recurrent_conn))


@dataclass(frozen=True)
class MmvNetwork:
    """Discrete MMV network with a logistic readout"""
    connectivity: TernaryConnectivity
    periods: np.ndarray          # (C,) integer timer periods
    readout_weights: np.ndarray  # (C, K)
    readout_bias: np.ndarray     # (K,)

    def __post_init__(self):
        neurons = self.connectivity.neurons
        periods = np.array(self.periods, copy=True)
        if periods.shape != (neurons,):
            raise MmvError(f"Expected {neurons} periods, got shape {periods.shape}")
        if periods.size and not np.all(periods == np.round(periods)):
            raise MmvError("Timer periods must be integers")
        periods = periods.astype(np.int64)
        if np.any(periods < 1):
            raise MmvError("Timer periods must be >= 1")

        weights = np.array(self.readout_weights, dtype=np.float64, copy=True)
        bias = np.array(self.readout_bias, dtype=np.float64, copy=True).reshape(-1)
        if weights.ndim != 2 or weights.shape[0] != neurons:
            raise MmvError(f"Readout weights must be {neurons}xK, got {weights.shape}")
        if bias.shape != (weights.shape[1],):
            raise MmvError(f"Readout bias must have {weights.shape[1]} entries, got {bias.shape}")

        for array in (periods, weights, bias):
            array.flags.writeable = False
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "readout_weights", weights)
        object.__setattr__(self, "readout_bias", bias)

    @property
    def neurons(self) -> int:
        return self.connectivity.neurons

    @property
    def input_width(self) -> int:
        return self.connectivity.input_width

    @property
    def num_classes(self) -> int:
        return self.readout_weights.shape[1]

    def validate_periods(self, time_steps: int) -> None:
        """A period longer than the run could never fire"""
        if self.periods.size and int(self.periods.max()) > time_steps:
            raise MmvError(
                f"Timer period {int(self.periods.max())} exceeds the run length of {time_steps} steps"
            )

    @cached_property
    def masks(self) -> "SynapseMasks":
        conn = self.connectivity
        return SynapseMasks(
            exc_in=(conn.input_conn == Synapse.EXC).astype(np.int32),
            inh_in=(conn.input_conn == Synapse.INH).astype(np.int32),
            exc_rec=(conn.recurrent_conn == Synapse.EXC).astype(np.int32),
            inh_rec=(conn.recurrent_conn == Synapse.INH).astype(np.int32),
        )


@dataclass(frozen=True)
class SynapseMasks:
    exc_in: np.ndarray
    inh_in: np.ndarray
    exc_rec: np.ndarray
    inh_rec: np.ndarray


@dataclass
class MmvState:
    """Per-stream timer state; confined to one execution context"""
    counters: np.ndarray
    triggered: np.ndarray
    last_output: np.ndarray

    @classmethod
    def zeros(cls, neurons: int) -> "MmvState":
        return cls(
            counters=np.zeros(neurons, dtype=np.int64),
            triggered=np.zeros(neurons, dtype=bool),
            last_output=np.zeros(neurons, dtype=np.uint8),
        )
