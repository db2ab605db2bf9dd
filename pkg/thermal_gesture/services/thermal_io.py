"""Acquisition ingest, sliding windows and spike encoding"""
import logging
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from thermal_gesture.models.thermal import (
    DAYPART_SUFFIXES,
    FRAME_HEIGHT,
    FRAME_PIXELS,
    FRAME_WIDTH,
    NAME_PREFIXES,
    Acquisition,
    Daypart,
    FrameShapeError,
    GestureLabel,
    NonFiniteValueError,
    SpikeRaster,
    ThermalFrame,
    ThermalWindow,
)
from thermal_gesture.services.errors import ConfigError, ThermalIOError

logger = logging.getLogger(__name__)

__all__ = [
    "BadFrameWidthError",
    "EmptyAcquisitionError",
    "FrameShapeError",
    "InsufficientHistoryError",
    "InvalidWindowError",
    "MalformedHeaderError",
    "NonFiniteValueError",
    "UnreadableAcquisitionError",
    "convert_release",
    "encode_window",
    "iter_windows",
    "load_acquisition",
    "load_directory",
    "normalize",
    "parse_name",
    "temporal_diff",
    "to_spikes",
    "window_at",
    "write_acquisition",
]


class MalformedHeaderError(ThermalIOError):
    """Exception raised when the `h,w,fps,name` header cannot be parsed"""
    pass


class EmptyAcquisitionError(ThermalIOError):
    """Exception raised when an acquisition holds no frames"""
    pass


class UnreadableAcquisitionError(ThermalIOError):
    """Exception raised when an acquisition file is not UTF-8 text"""
    pass


class BadFrameWidthError(ThermalIOError):
    """Exception raised when a frame row does not hold h*w values"""

    def __init__(self, message: str, row: int, line: Optional[int] = None):
        super().__init__(message)
        self.row = row
        self.line = line


class InsufficientHistoryError(ThermalIOError):
    """Exception raised when fewer than N_c frames precede index k"""
    pass


class InvalidWindowError(ThermalIOError):
    """Exception raised for window requests outside the acquisition"""
    pass


def parse_name(name: str) -> Tuple[GestureLabel, Daypart]:
    """Split an acquisition name like `cirCW-gesture-m` into label and daypart"""
    try:
        prefix, kind, suffix = name.split("-")
    except ValueError:
        raise MalformedHeaderError(f"Acquisition name '{name}' is not '<type>-gesture-<m|n>'")
    if kind != "gesture" or prefix not in NAME_PREFIXES or suffix not in DAYPART_SUFFIXES:
        raise MalformedHeaderError(f"Unknown acquisition name '{name}'")
    return NAME_PREFIXES[prefix], DAYPART_SUFFIXES[suffix]


def _parse_header(line: str) -> str:
    fields = [field.strip() for field in line.split(",")]
    if len(fields) != 4:
        raise MalformedHeaderError(f"Header must be 'h,w,fps,name', got '{line.strip()}'")
    try:
        height, width, fps = (int(value) for value in fields[:3])
    except ValueError:
        raise MalformedHeaderError(f"Header dimensions must be integers, got '{line.strip()}'")
    if (height, width) != (FRAME_HEIGHT, FRAME_WIDTH):
        raise MalformedHeaderError(
            f"Expected {FRAME_HEIGHT}x{FRAME_WIDTH} frames, header declares {height}x{width}"
        )
    if fps <= 0:
        raise MalformedHeaderError(f"Frame rate must be positive, got {fps}")
    return fields[3]


def load_acquisition(path: Union[str, Path]) -> Acquisition:
    """Load an acquisition from the canonical text format

    Raises:
        UnreadableAcquisitionError: the file does not decode as UTF-8
        MalformedHeaderError: bad header or acquisition name
        EmptyAcquisitionError: no frame rows
        BadFrameWidthError: a row without exactly 768 values
        NonFiniteValueError: a NaN/inf or unparsable value
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
    except UnicodeDecodeError as e:
        raise UnreadableAcquisitionError(f"{path}: not a text acquisition (byte {e.start}: {e.reason})")

    if not any(line.strip() for line in lines):
        raise EmptyAcquisitionError(f"{path}: empty file")
    name = _parse_header(lines[0])
    label, daypart = parse_name(name)

    frames: List[ThermalFrame] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        row = len(frames)
        tokens = line.split(",")
        if len(tokens) != FRAME_PIXELS:
            raise BadFrameWidthError(
                f"{path}:{line_no}: frame row {row} has {len(tokens)} values, expected {FRAME_PIXELS}",
                row=row,
                line=line_no,
            )
        try:
            values = np.array([float(token) for token in tokens])
        except ValueError:
            raise NonFiniteValueError(
                f"{path}:{line_no}: frame row {row} holds a non-numeric value", row=row, line=line_no
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteValueError(
                f"{path}:{line_no}: frame row {row} holds a non-finite value", row=row, line=line_no
            )
        frames.append(ThermalFrame(values.reshape(FRAME_HEIGHT, FRAME_WIDTH), timestamp_index=row))

    if not frames:
        raise EmptyAcquisitionError(f"{path}: acquisition '{name}' has no frames")

    logger.info(f"Loaded acquisition {name} ({label.value}, {daypart.value}) with {len(frames)} frames")
    return Acquisition(name=name, daypart=daypart, gesture_label=label, frames=frames)


def write_acquisition(acq: Acquisition, path: Union[str, Path], fps: int = 8) -> Path:
    """Write an acquisition in the canonical text format"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{FRAME_HEIGHT},{FRAME_WIDTH},{fps},{acq.name}\n")
        for frame in acq.frames:
            f.write(",".join(repr(float(value)) for value in frame.pixels.ravel()))
            f.write("\n")
    return path


def _load_release_matrix(path: Path) -> np.ndarray:
    if path.suffix == ".npy":
        data = np.load(path)
    else:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    if data.ndim == 3 and data.shape[1:] == (FRAME_HEIGHT, FRAME_WIDTH):
        data = data.reshape(data.shape[0], FRAME_PIXELS)
    if data.ndim != 2 or data.shape[1] != FRAME_PIXELS:
        raise FrameShapeError(f"{path}: cannot interpret array of shape {data.shape} as frames")
    return data


def convert_release(src: Union[str, Path], dst: Union[str, Path], fps: int = 8) -> List[Path]:
    """Convert a released dataset directory into canonical acquisition files

    Each `.npy`, `.csv` or `.txt` file whose stem is a valid acquisition
    name becomes `<dst>/<stem>.csv`; anything else is skipped.
    """
    src, dst = Path(src), Path(dst)
    if not src.is_dir():
        raise ThermalIOError(f"Release directory not found: {src}")

    written = []
    for path in sorted(src.iterdir()):
        if path.suffix not in (".npy", ".csv", ".txt"):
            continue
        try:
            label, daypart = parse_name(path.stem)
            data = _load_release_matrix(path)
        except (ThermalIOError, ValueError) as e:
            logger.warning(f"Skipping {path.name}: {e}")
            continue
        if data.shape[0] == 0:
            logger.warning(f"Skipping {path.name}: no frames")
            continue
        frames = [
            ThermalFrame(row.reshape(FRAME_HEIGHT, FRAME_WIDTH), timestamp_index=i)
            for i, row in enumerate(data)
        ]
        acq = Acquisition(name=path.stem, daypart=daypart, gesture_label=label, frames=frames)
        written.append(write_acquisition(acq, dst / f"{path.stem}.csv", fps=fps))
        logger.info(f"Converted {path.name} -> {written[-1]} ({len(frames)} frames)")
    return written


def load_directory(directory: Union[str, Path]) -> List[Acquisition]:
    """Every canonical `*.csv` acquisition in a directory, sorted by name"""
    directory = Path(directory)
    if not directory.is_dir():
        raise ThermalIOError(f"Dataset directory not found: {directory}")
    acquisitions = [load_acquisition(path) for path in sorted(directory.glob("*.csv"))]
    if not acquisitions:
        raise EmptyAcquisitionError(f"No acquisitions found in {directory}")
    return acquisitions


def window_at(acq: Acquisition, k: int, n_c: int) -> ThermalWindow:
    """The N_c frames ending at frame k, flattened row-major"""
    if n_c < 2:
        raise InvalidWindowError(f"N_c must be >= 2, got {n_c}")
    if k < n_c - 1:
        raise InsufficientHistoryError(f"Window ending at frame {k} needs {n_c} frames of history")
    if k >= len(acq):
        raise InvalidWindowError(f"Frame {k} is beyond the end of '{acq.name}' ({len(acq)} frames)")
    rows = acq.stack[k - n_c + 1:k + 1].reshape(n_c, FRAME_PIXELS)
    return ThermalWindow(rows=rows, end_index=k)


def iter_windows(acq: Acquisition, n_c: int) -> Iterator[ThermalWindow]:
    for k in range(n_c - 1, len(acq)):
        yield window_at(acq, k, n_c)


def normalize(window: ThermalWindow) -> ThermalWindow:
    """Min-max scale the whole window to [0, 1]; a constant window maps to zeros"""
    rows = window.rows
    low, high = rows.min(), rows.max()
    if high == low:
        scaled = np.zeros_like(rows)
    else:
        scaled = (rows - low) / (high - low)
    return ThermalWindow(rows=scaled, end_index=window.end_index)


def temporal_diff(window: ThermalWindow) -> np.ndarray:
    """Frame-to-frame change, shape (N_c - 1) x 768"""
    return np.diff(window.rows, axis=0)


def to_spikes(delta: np.ndarray, theta_s: float, origin_index: int = 0) -> SpikeRaster:
    """Threshold |delta| >= theta_s and reshape to one image row per time step"""
    if theta_s <= 0:
        raise ConfigError(f"Spike threshold must be positive, got {theta_s}")
    delta = np.asarray(delta, dtype=np.float64)
    if delta.ndim != 2 or delta.shape[1] != FRAME_PIXELS:
        raise FrameShapeError(f"Delta must be (N_c - 1) x {FRAME_PIXELS}, got {delta.shape}")
    bits = (np.abs(delta) >= theta_s).astype(np.uint8)
    return SpikeRaster(bits=bits.reshape(-1, FRAME_WIDTH), origin_index=origin_index)


def encode_window(window: ThermalWindow, theta_s: float) -> SpikeRaster:
    """Normalize, differentiate and threshold a raw window"""
    return to_spikes(temporal_diff(normalize(window)), theta_s, origin_index=window.end_index)
