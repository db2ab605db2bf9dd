from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from thermal_gesture.models.track import GestureClass
from thermal_gesture.services.errors import ThermalIOError

FRAME_HEIGHT = 24
FRAME_WIDTH = 32
FRAME_PIXELS = FRAME_HEIGHT * FRAME_WIDTH


class FrameShapeError(ThermalIOError):
    """Exception raised when a frame or window has the wrong dimensions"""
    pass


class NonFiniteValueError(ThermalIOError):
    """Exception raised when a frame holds NaN or infinite values"""

    def __init__(self, message: str, row: Optional[int] = None, line: Optional[int] = None):
        super().__init__(message)
        self.row = row
        self.line = line


class Daypart(str, Enum):
    MORNING = "morning"
    NIGHT = "night"


class GestureLabel(str, Enum):
    """Acquisition-level label, one per recording type"""
    NO_GESTURE = "NoGesture"
    ALL_GESTURES = "AllGestures"
    CIR_CW = "CirCW"
    CIR_CCW = "CirCCW"
    VERTICAL = "Vertical"
    HORIZONTAL = "Horizontal"

    @property
    def gesture_class(self) -> Optional[GestureClass]:
        """Per-gesture class, None for mixed recordings"""
        if self is GestureLabel.ALL_GESTURES:
            return None
        return GestureClass(self.value)


# name prefix (before "-gesture") -> label
NAME_PREFIXES = {
    "no": GestureLabel.NO_GESTURE,
    "all": GestureLabel.ALL_GESTURES,
    "cirCW": GestureLabel.CIR_CW,
    "cirCCW": GestureLabel.CIR_CCW,
    "vert": GestureLabel.VERTICAL,
    "hor": GestureLabel.HORIZONTAL,
}

DAYPART_SUFFIXES = {"m": Daypart.MORNING, "n": Daypart.NIGHT}


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class ThermalFrame:
    """One 24x32 frame of temperatures in degrees Celsius"""
    pixels: np.ndarray
    timestamp_index: int = 0

    def __post_init__(self):
        pixels = _frozen(self.pixels)
        if pixels.shape != (FRAME_HEIGHT, FRAME_WIDTH):
            raise FrameShapeError(
                f"Frame must be {FRAME_HEIGHT}x{FRAME_WIDTH}, got {pixels.shape}"
            )
        if not np.all(np.isfinite(pixels)):
            raise NonFiniteValueError(
                f"Frame {self.timestamp_index} holds non-finite values",
                row=self.timestamp_index,
            )
        if self.timestamp_index < 0:
            raise FrameShapeError(f"Negative frame index {self.timestamp_index}")
        object.__setattr__(self, "pixels", pixels)


@dataclass(frozen=True)
class Acquisition:
    """A named recording; `gesture_count` is known only for synthetic data"""
    name: str
    daypart: Daypart
    gesture_label: GestureLabel
    frames: Sequence[ThermalFrame]
    gesture_count: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))

    def __len__(self) -> int:
        return len(self.frames)

    @cached_property
    def stack(self) -> np.ndarray:
        """All frames as a read-only (n, 24, 32) array"""
        if not self.frames:
            return np.zeros((0, FRAME_HEIGHT, FRAME_WIDTH))
        stacked = np.stack([frame.pixels for frame in self.frames])
        stacked.flags.writeable = False
        return stacked


@dataclass(frozen=True)
class ThermalWindow:
    """The N_c x 768 matrix of the past N_c flattened frames ending at frame k"""
    rows: np.ndarray
    end_index: int

    def __post_init__(self):
        rows = _frozen(self.rows)
        if rows.ndim != 2 or rows.shape[1] != FRAME_PIXELS or rows.shape[0] < 1:
            raise FrameShapeError(
                f"Window must be N_c x {FRAME_PIXELS}, got {rows.shape}"
            )
        object.__setattr__(self, "rows", rows)

    @property
    def n_c(self) -> int:
        return self.rows.shape[0]

    def frame(self, index: int) -> np.ndarray:
        """Row `index` reshaped back to a 24x32 image"""
        return self.rows[index].reshape(FRAME_HEIGHT, FRAME_WIDTH)


@dataclass(frozen=True)
class SpikeRaster:
    """Binary (N_c-1)*24 x 32 raster fed one row per MMV time step"""
    bits: np.ndarray
    origin_index: int = 0

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8, copy=True)
        if bits.ndim != 2:
            raise FrameShapeError(f"Raster must be 2-D, got shape {bits.shape}")
        if np.any(bits > 1):
            raise ThermalIOError("Raster entries must be 0 or 1")
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @property
    def time_steps(self) -> int:
        return self.bits.shape[0]

    @property
    def channels(self) -> int:
        return self.bits.shape[1]

    def unreshape(self) -> np.ndarray:
        """Recover the (N_c-1) x 768 thresholded matrix"""
        return self.bits.reshape(-1, FRAME_PIXELS)
