"""Synthetic thermal scenes with a warm hand blob moving over a static background"""
import logging
from typing import List, Optional, Tuple

import numpy as np

from thermal_gesture.models.thermal import (
    FRAME_HEIGHT,
    FRAME_WIDTH,
    NAME_PREFIXES,
    Acquisition,
    Daypart,
    GestureLabel,
    SpikeRaster,
    ThermalFrame,
    ThermalWindow,
)
from thermal_gesture.models.track import GestureClass
from thermal_gesture.services.errors import ConfigError
from thermal_gesture.services.thermal_io import encode_window

logger = logging.getLogger(__name__)

GESTURE_FRAMES = 12
DEFAULT_GAP = 20
CIRCLE_RADIUS = 7.0

_ROWS, _COLS = np.mgrid[0:FRAME_HEIGHT, 0:FRAME_WIDTH].astype(np.float64)
_PREFIX_BY_LABEL = {label: prefix for prefix, label in NAME_PREFIXES.items()}
_SUFFIX_BY_DAYPART = {Daypart.MORNING: "m", Daypart.NIGHT: "n"}
_CYCLE = [GestureClass.CIR_CW, GestureClass.CIR_CCW, GestureClass.VERTICAL, GestureClass.HORIZONTAL]


class SceneGenerator:
    """Seeded generator of frames, acquisitions and detection windows

    The background is a smooth field spanning `background_range` degrees;
    per-frame noise has standard deviation `noise_sigma` times that span,
    so on the normalized scale of a static window it is `noise_sigma`.
    """

    def __init__(
        self,
        seed: int = 0,
        noise_sigma: float = 0.02,
        ambient: float = 22.0,
        background_range: float = 4.0,
        blob_amplitude: float = 8.0,
        blob_sigma: float = 1.5,
        gesture_frames: int = GESTURE_FRAMES,
    ):
        if noise_sigma < 0 or background_range <= 0 or blob_sigma <= 0 or gesture_frames < 2:
            raise ConfigError("Invalid synthetic scene parameters")
        self.rng = np.random.default_rng(seed)
        self.noise_sigma = noise_sigma
        self.blob_amplitude = blob_amplitude
        self.blob_sigma = blob_sigma
        self.gesture_frames = gesture_frames
        self.background_range = background_range
        self.background = self._background(ambient, background_range)

    def _background(self, ambient: float, span: float) -> np.ndarray:
        phase = self.rng.uniform(0, 2 * np.pi, size=2)
        field = (
            _COLS / (FRAME_WIDTH - 1)
            + 0.5 * _ROWS / (FRAME_HEIGHT - 1)
            + 0.3 * np.sin(_COLS / 5.0 + phase[0]) * np.cos(_ROWS / 4.0 + phase[1])
        )
        field = (field - field.min()) / (field.max() - field.min())
        return ambient + span * field

    def _noise(self) -> np.ndarray:
        if self.noise_sigma == 0:
            return np.zeros_like(self.background)
        return self.rng.normal(0.0, self.noise_sigma * self.background_range, size=self.background.shape)

    def blob(self, x: float, y: float) -> np.ndarray:
        return self.blob_amplitude * np.exp(
            -((_COLS - x) ** 2 + (_ROWS - y) ** 2) / (2.0 * self.blob_sigma ** 2)
        )

    def static_frames(self, n: int) -> List[np.ndarray]:
        return [self.background + self._noise() for _ in range(n)]

    def path(self, gesture: GestureClass) -> List[Tuple[float, float]]:
        """Blob centre (x, y) for every frame of one gesture"""
        n = self.gesture_frames
        cx = (FRAME_WIDTH - 1) / 2.0 + self.rng.uniform(-1.0, 1.0)
        cy = (FRAME_HEIGHT - 1) / 2.0 + self.rng.uniform(-1.0, 1.0)
        steps = np.arange(n)

        if gesture in (GestureClass.CIR_CW, GestureClass.CIR_CCW):
            start = self.rng.uniform(0, 2 * np.pi)
            # CirCW paths have a decreasing atan2 angle about the centre
            direction = -1.0 if gesture is GestureClass.CIR_CW else 1.0
            angles = start + direction * 2 * np.pi * steps / n
            xs = cx + CIRCLE_RADIUS * np.cos(angles)
            ys = cy + CIRCLE_RADIUS * np.sin(angles)
        elif gesture is GestureClass.VERTICAL:
            ys = np.linspace(3.0, FRAME_HEIGHT - 4.0, n)
            if self.rng.random() < 0.5:
                ys = ys[::-1]
            xs = np.full(n, cx)
        elif gesture is GestureClass.HORIZONTAL:
            xs = np.linspace(4.0, FRAME_WIDTH - 5.0, n)
            if self.rng.random() < 0.5:
                xs = xs[::-1]
            ys = np.full(n, cy)
        else:
            raise ConfigError(f"No motion path for {gesture.value}")
        return list(zip(xs.tolist(), ys.tolist()))

    def gesture_frames_for(self, gesture: GestureClass) -> List[np.ndarray]:
        return [self.background + self.blob(x, y) + self._noise() for x, y in self.path(gesture)]

    def acquisition(
        self,
        label: GestureLabel,
        n_gestures: int = 1,
        gap: int = DEFAULT_GAP,
        daypart: Daypart = Daypart.MORNING,
        name: Optional[str] = None,
    ) -> Acquisition:
        """Static lead-in, then `n_gestures` gestures each followed by `gap` static frames

        A no-gesture recording has the same length with no blob.
        """
        frames = self.static_frames(gap)
        for i in range(n_gestures):
            if label is GestureLabel.NO_GESTURE:
                frames.extend(self.static_frames(self.gesture_frames))
            else:
                gesture = _CYCLE[i % len(_CYCLE)] if label is GestureLabel.ALL_GESTURES else label.gesture_class
                frames.extend(self.gesture_frames_for(gesture))
            frames.extend(self.static_frames(gap))

        name = name or f"{_PREFIX_BY_LABEL[label]}-gesture-{_SUFFIX_BY_DAYPART[daypart]}"
        count = 0 if label is GestureLabel.NO_GESTURE else n_gestures
        return Acquisition(
            name=name,
            daypart=daypart,
            gesture_label=label,
            frames=[ThermalFrame(f, timestamp_index=i) for i, f in enumerate(frames)],
            gesture_count=count,
        )

    def detection_samples(self, n: int, n_c: int, theta_s: float) -> List[Tuple[SpikeRaster, int]]:
        """`n` labelled rasters, alternating moving-blob (1) and static-noise (0) windows"""
        samples = []
        for i in range(n):
            if i % 2 == 0:
                gesture = _CYCLE[(i // 2) % len(_CYCLE)]
                motion = self.gesture_frames_for(gesture)
                start = int(self.rng.integers(0, len(motion) - n_c + 1))
                frames, label = motion[start:start + n_c], 1
            else:
                frames, label = self.static_frames(n_c), 0
            window = ThermalWindow(rows=np.stack(frames).reshape(n_c, -1), end_index=n_c - 1)
            samples.append((encode_window(window, theta_s), label))
        logger.info(f"Generated {n} synthetic detection windows")
        return samples
