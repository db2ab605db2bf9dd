import csv
import io
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, List, Optional

from thermal_gesture.services.errors import ConfigError, PipelineError


class GestureClass(str, Enum):
    """Recognised classes; declaration order is the readout/confusion index order"""
    NO_GESTURE = "NoGesture"
    CIR_CW = "CirCW"
    CIR_CCW = "CirCCW"
    VERTICAL = "Vertical"
    HORIZONTAL = "Horizontal"

    @property
    def index(self) -> int:
        return list(GestureClass).index(self)

    @classmethod
    def from_index(cls, index: int) -> "GestureClass":
        return list(cls)[index]


@dataclass(frozen=True)
class Centroid:
    x: float  # column, rightward
    y: float  # row, downward

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    def within(self, height: int, width: int) -> bool:
        return 0.0 <= self.x <= width - 1 and 0.0 <= self.y <= height - 1


@dataclass(frozen=True)
class TrackPoint:
    k: int
    raw: Centroid
    filtered: Centroid


@dataclass
class GestureTrack:
    """Ring buffer of low-pass-filtered hand centroids"""
    beta: float = 0.5
    max_length: int = 10
    n_gap: int = 3
    history: Deque[TrackPoint] = field(default_factory=deque)
    lowpass_state: Optional[Centroid] = None
    missed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"beta must lie in [0, 1], got {self.beta}")
        if self.max_length < 1:
            raise ConfigError(f"max_length must be >= 1, got {self.max_length}")
        self.history = deque(self.history, maxlen=self.max_length)

    @property
    def points(self) -> List[Centroid]:
        return [point.filtered for point in self.history]

    @property
    def start_index(self) -> Optional[int]:
        return self.history[0].k if self.history else None

    @property
    def end_index(self) -> Optional[int]:
        return self.history[-1].k if self.history else None

    @property
    def is_full(self) -> bool:
        return len(self.history) >= self.max_length

    @property
    def is_closed(self) -> bool:
        return self.missed >= self.n_gap

    def __len__(self) -> int:
        return len(self.history)

    def add_point(self, raw: Centroid, k: int = 0) -> Centroid:
        """Apply the first-order low-pass filter and append the result"""
        if self.lowpass_state is None:
            filtered = raw
        else:
            prev = self.lowpass_state
            filtered = Centroid(
                x=self.beta * prev.x + (1.0 - self.beta) * raw.x,
                y=self.beta * prev.y + (1.0 - self.beta) * raw.y,
            )
        self.lowpass_state = filtered
        self.history.append(TrackPoint(k=k, raw=raw, filtered=filtered))
        self.missed = 0
        return filtered

    def mark_missing(self) -> None:
        self.missed += 1

    def reset(self) -> None:
        self.history.clear()
        self.lowpass_state = None
        self.missed = 0

    def copy(self) -> "GestureTrack":
        return GestureTrack(
            beta=self.beta,
            max_length=self.max_length,
            n_gap=self.n_gap,
            history=deque(self.history),
            lowpass_state=self.lowpass_state,
            missed=self.missed,
        )

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["k", "x_raw", "y_raw", "x_filt", "y_filt"])
        for point in self.history:
            writer.writerow([
                point.k, repr(point.raw.x), repr(point.raw.y),
                repr(point.filtered.x), repr(point.filtered.y),
            ])
        return buffer.getvalue()


@dataclass(frozen=True)
class TrackFeatures:
    d_x: float
    d_y: float
    var_x: float
    var_y: float
    angle_trend: float


@dataclass
class GestureEvent:
    start_index: int
    end_index: int
    predicted: GestureClass
    track: Optional[GestureTrack] = None

    def __post_init__(self):
        if self.start_index > self.end_index:
            raise PipelineError(
                f"Event start {self.start_index} after end {self.end_index}"
            )
