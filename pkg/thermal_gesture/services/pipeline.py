"""Wake-up gated gesture recognition over frame streams, and its evaluation"""
import asyncio
from abc import ABC, abstractmethod
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import Field

from thermal_gesture.config.config import RunConfig
from thermal_gesture.config.settings import settings
from thermal_gesture.models.mmv import MmvNetwork
from thermal_gesture.models.report import AcquisitionResult, EvaluationReport
from thermal_gesture.models.thermal import (
    FRAME_HEIGHT,
    FRAME_PIXELS,
    FRAME_WIDTH,
    Acquisition,
    Daypart,
    GestureLabel,
    ThermalFrame,
    ThermalWindow,
)
from thermal_gesture.models.track import GestureClass, GestureEvent, GestureTrack
from thermal_gesture.services.classifier import MIN_TRACK_POINTS, classify_track
from thermal_gesture.services.errors import ConfigError, MmvError, PipelineError
from thermal_gesture.services.metrics import CostModel, count_params
from thermal_gesture.services.mmv import classify_window, detect
from thermal_gesture.services.rpca import RpcaConfig, pcp
from thermal_gesture.services.thermal_io import normalize
from thermal_gesture.services.tracker import extract_centroid, lowpass_update

logger = logging.getLogger(__name__)

FrameSource = Union[Acquisition, Sequence[ThermalFrame], Sequence[np.ndarray], np.ndarray]


class EmptyDatasetError(PipelineError):
    """Exception raised when there is nothing to evaluate"""
    pass


class PipelineConfig(RunConfig):
    n_c: int = Field(default=5, ge=2)
    height: int = Field(default=FRAME_HEIGHT, gt=0)
    width: int = Field(default=FRAME_WIDTH, gt=0)
    track_length: int = Field(default=10, ge=MIN_TRACK_POINTS)
    beta: float = Field(default=0.5, ge=0.0, le=1.0)
    theta_s: float = Field(default=0.2, gt=0.0)
    theta_c1: float = Field(default=5.0, gt=0.0)
    theta_c2: float = Field(default=5.0, gt=0.0)
    rpca_lambda: float = Field(default=0.05, gt=0.0)
    rpca_max_iter: int = Field(default=100, ge=1)
    rpca_mu_growth: float = Field(default=1.5, ge=1.0)
    theta_blob: float = Field(default=0.1, gt=0.0)
    n_gap: int = Field(default=3, ge=1)
    detector_path: Optional[Path] = None

    @classmethod
    def from_settings(cls, **overrides) -> "PipelineConfig":
        values = dict(
            n_c=settings.N_C,
            height=settings.FRAME_HEIGHT,
            width=settings.FRAME_WIDTH,
            track_length=settings.TRACK_LENGTH,
            beta=settings.BETA,
            theta_s=settings.THETA_S,
            theta_c1=settings.THETA_C1,
            theta_c2=settings.THETA_C2,
            rpca_lambda=settings.RPCA_LAMBDA,
            rpca_max_iter=settings.RPCA_MAX_ITER,
            rpca_mu_growth=settings.RPCA_MU_GROWTH,
            theta_blob=settings.THETA_BLOB,
            n_gap=settings.N_GAP,
        )
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    @property
    def time_steps(self) -> int:
        return (self.n_c - 1) * self.height

    @property
    def rpca(self) -> RpcaConfig:
        return RpcaConfig(lam=self.rpca_lambda, max_iter=self.rpca_max_iter, mu_growth=self.rpca_mu_growth)

    def check_network(self, net: MmvNetwork, num_classes: int) -> None:
        """Reject networks whose shape does not fit these windows"""
        if net.input_width != self.width:
            raise ConfigError(f"Network expects {net.input_width} input lines, frames are {self.width} wide")
        if net.num_classes != num_classes:
            raise ConfigError(f"Network has {net.num_classes} readout classes, expected {num_classes}")
        try:
            net.validate_periods(self.time_steps)
        except MmvError as e:
            raise ConfigError(str(e))


@dataclass
class PipelineCounters:
    windows: int = 0
    detections: int = 0
    rpca_calls: int = 0
    events: int = 0


def _frame_matrix(frames: FrameSource) -> np.ndarray:
    if isinstance(frames, Acquisition):
        stack = frames.stack
    elif isinstance(frames, np.ndarray):
        stack = frames
    elif len(frames) == 0:
        stack = np.zeros((0, FRAME_PIXELS))
    else:
        stack = np.stack([f.pixels if isinstance(f, ThermalFrame) else np.asarray(f) for f in frames])
    return np.asarray(stack, dtype=np.float64).reshape(-1, FRAME_PIXELS)


class _StreamBase(ABC):
    def __init__(self, net: MmvNetwork, cfg: PipelineConfig, num_classes: int):
        cfg.check_network(net, num_classes)
        self.net = net
        self.cfg = cfg
        self.counters = PipelineCounters()
        self.reset()

    @abstractmethod
    def reset(self) -> None:
        """Drop all per-stream state"""

    @abstractmethod
    def process_window(self, window: ThermalWindow) -> Optional[GestureEvent]:
        """Consume one window ending at `window.end_index`"""

    def flush(self, last_index: int) -> Optional[GestureEvent]:
        return None

    def process_stream(self, frames: FrameSource) -> List[GestureEvent]:
        """Slide an N_c window one frame at a time and collect emitted events"""
        matrix = _frame_matrix(frames)
        n_c = self.cfg.n_c
        events = []
        for k in range(n_c - 1, matrix.shape[0]):
            event = self.process_window(ThermalWindow(rows=matrix[k - n_c + 1:k + 1], end_index=k))
            if event is not None:
                events.append(event)
        if matrix.shape[0] >= n_c:
            event = self.flush(matrix.shape[0] - 1)
            if event is not None:
                events.append(event)
        self.counters.events += len(events)
        return events


class GesturePipeline(_StreamBase):
    """MMV wake-up detector gating R-PCA segmentation, tracking and rule classification

    Once an event is emitted no new track starts until the detector has
    gone back to sleep, so one gesture yields one event.
    """

    def __init__(self, detector: MmvNetwork, cfg: Optional[PipelineConfig] = None):
        super().__init__(detector, cfg or PipelineConfig(), num_classes=2)
        self._rpca_cfg = self.cfg.rpca

    def reset(self) -> None:
        self.awake = False
        self.refractory = False
        self.negatives = 0
        self.track = GestureTrack(beta=self.cfg.beta, max_length=self.cfg.track_length, n_gap=self.cfg.n_gap)

    def _segment(self, window: ThermalWindow):
        self.counters.rpca_calls += 1
        result = pcp(normalize(window).rows, self._rpca_cfg)
        sparse = result.S[-1].reshape(self.cfg.height, self.cfg.width)
        return extract_centroid(sparse, self.cfg.theta_blob)

    def _emit(self) -> GestureEvent:
        track = self.track.copy()
        predicted = classify_track(track, self.cfg.theta_c1, self.cfg.theta_c2)
        event = GestureEvent(
            start_index=track.start_index,
            end_index=track.end_index,
            predicted=predicted,
            track=track,
        )
        logger.info(f"Gesture {predicted.value} over frames {event.start_index}-{event.end_index}")
        self.track.reset()
        self.refractory = self.awake
        return event

    def _close_if_done(self) -> Optional[GestureEvent]:
        if self.track.is_full:
            return self._emit()
        if self.track.is_closed:
            if len(self.track) >= MIN_TRACK_POINTS:
                return self._emit()
            logger.debug(f"Discarding {len(self.track)}-point track")
            self.track.reset()
        return None

    def process_window(self, window: ThermalWindow) -> Optional[GestureEvent]:
        k = window.end_index
        self.counters.windows += 1
        present = detect(self.net, window, self.cfg.theta_s)

        if present:
            self.counters.detections += 1
            self.negatives = 0
            if not self.awake:
                logger.debug(f"Wake at frame {k}")
                self.awake = True
            if self.refractory:
                return None
            centroid = self._segment(window)
            if centroid is not None:
                lowpass_update(self.track, centroid, k)
            else:
                self.track.mark_missing()
        else:
            self.negatives += 1
            if self.awake and self.negatives >= self.cfg.n_gap:
                logger.debug(f"Sleep at frame {k}")
                self.awake = False
                self.refractory = False
            if len(self.track):
                self.track.mark_missing()

        return self._close_if_done()

    def flush(self, last_index: int) -> Optional[GestureEvent]:
        if len(self.track) >= MIN_TRACK_POINTS:
            return self._emit()
        self.track.reset()
        return None


class MmvOnlyPipeline(_StreamBase):
    """Per-window 5-class MMV decisions merged into events by majority vote"""

    def __init__(self, classifier: MmvNetwork, cfg: Optional[PipelineConfig] = None):
        super().__init__(classifier, cfg or PipelineConfig(), num_classes=len(GestureClass))

    def reset(self) -> None:
        self.votes: Counter = Counter()
        self.start: Optional[int] = None
        self.end: Optional[int] = None
        self.negatives = 0

    def _emit(self) -> GestureEvent:
        best = max(self.votes.values())
        # ties go to declaration order
        predicted = next(c for c in GestureClass if self.votes.get(c) == best)
        event = GestureEvent(start_index=self.start, end_index=self.end, predicted=predicted)
        logger.info(f"Gesture {predicted.value} over frames {self.start}-{self.end} (MMV only)")
        self.reset()
        return event

    def process_window(self, window: ThermalWindow) -> Optional[GestureEvent]:
        self.counters.windows += 1
        predicted = classify_window(self.net, window, self.cfg.theta_s)
        if predicted is not GestureClass.NO_GESTURE:
            self.counters.detections += 1
            self.votes[predicted] += 1
            self.start = window.end_index if self.start is None else self.start
            self.end = window.end_index
            self.negatives = 0
            return None
        self.negatives += 1
        if self.votes and self.negatives >= self.cfg.n_gap:
            return self._emit()
        return None

    def flush(self, last_index: int) -> Optional[GestureEvent]:
        return self._emit() if self.votes else None


def process_stream(frames: FrameSource, cfg: PipelineConfig, detector: MmvNetwork) -> List[GestureEvent]:
    return GesturePipeline(detector, cfg).process_stream(frames)


def score_acquisition(acq: Acquisition, events: Sequence[GestureEvent], rpca_calls: int = 0) -> AcquisitionResult:
    """Confusion counts for one labelled recording

    No-gesture: no events is one correct sample, otherwise each event is a
    sample. Gesture: each event is a sample and every gesture without an
    event counts as predicted NoGesture; an unknown gesture count means at
    least one gesture.
    """
    truth = acq.gesture_label.gesture_class
    if truth is None:
        raise PipelineError(f"{acq.name} has no per-gesture label")
    confusion = np.zeros((len(GestureClass), len(GestureClass)), dtype=np.int64)
    for event in events:
        confusion[truth.index, event.predicted.index] += 1

    if truth is GestureClass.NO_GESTURE:
        if not events:
            confusion[truth.index, truth.index] += 1
    else:
        expected = acq.gesture_count if acq.gesture_count is not None else 1
        confusion[truth.index, GestureClass.NO_GESTURE.index] += max(0, expected - len(events))

    return AcquisitionResult(
        name=acq.name,
        label=acq.gesture_label,
        daypart=acq.daypart,
        predictions=[e.predicted for e in events],
        gesture_count=acq.gesture_count,
        confusion=confusion,
        rpca_calls=rpca_calls,
    )


def _make_stream(net: MmvNetwork, cfg: PipelineConfig, mode: str) -> _StreamBase:
    if mode == "modular":
        return GesturePipeline(net, cfg)
    if mode == "mmv-only":
        return MmvOnlyPipeline(net, cfg)
    raise ConfigError(f"Unknown evaluation mode '{mode}'")


def _evaluate_one(acq: Acquisition, cfg: PipelineConfig, net: MmvNetwork, mode: str) -> AcquisitionResult:
    stream = _make_stream(net, cfg, mode)
    events = stream.process_stream(acq)
    result = score_acquisition(acq, events, stream.counters.rpca_calls)
    logger.info(f"{acq.name}: {len(events)} events, {result.correct}/{result.samples} correct")
    return result


def _scorable(dataset: Iterable[Acquisition]) -> List[Acquisition]:
    acquisitions = list(dataset)
    if not acquisitions:
        raise EmptyDatasetError("No acquisitions to evaluate")
    scorable = []
    for acq in acquisitions:
        if acq.gesture_label.gesture_class is None:
            logger.warning(f"Skipping {acq.name}: mixed recording has no per-gesture label")
            continue
        scorable.append(acq)
    if not scorable:
        raise EmptyDatasetError("Every acquisition lacks a per-gesture label")
    return scorable


def _report(results: List[AcquisitionResult], net: MmvNetwork, cfg: PipelineConfig, mode: str) -> EvaluationReport:
    cost = CostModel(n_c=cfg.n_c, height=cfg.height, width=cfg.width, max_iter=cfg.rpca_max_iter,
                     windows_per_gesture=cfg.track_length, num_classes=net.num_classes)
    report = EvaluationReport.from_results(
        results,
        params_bytes=count_params(net).packed_bytes,
        avg_flops=cost.report(net, with_rpca=mode == "modular").avg_flops,
        mode=mode,
    )
    logger.info(f"Accuracy {report.accuracy:.3f} over {report.total_samples} samples ({mode})")
    return report


def evaluate(
    dataset: Iterable[Acquisition],
    cfg: PipelineConfig,
    detector: MmvNetwork,
    mode: str = "modular",
) -> EvaluationReport:
    """Run every labelled acquisition through a fresh stream and aggregate the scores

    In "mmv-only" mode `detector` is the 5-class window classifier.
    """
    results = [_evaluate_one(acq, cfg, detector, mode) for acq in _scorable(dataset)]
    return _report(results, detector, cfg, mode)


async def evaluate_async(
    dataset: Iterable[Acquisition],
    cfg: PipelineConfig,
    detector: MmvNetwork,
    mode: str = "modular",
) -> EvaluationReport:
    """Concurrent `evaluate`: one worker thread per acquisition, each with private stream state"""
    acquisitions = _scorable(dataset)
    results = await asyncio.gather(
        *(asyncio.to_thread(_evaluate_one, acq, cfg, detector, mode) for acq in acquisitions)
    )
    return _report(list(results), detector, cfg, mode)


def day_night_split(acquisitions: Iterable[Acquisition]) -> Tuple[List[Acquisition], List[Acquisition]]:
    """Train on the morning no-gesture and all-gesture recordings, evaluate on the rest"""
    train_labels = (GestureLabel.NO_GESTURE, GestureLabel.ALL_GESTURES)
    train, held_out = [], []
    for acq in acquisitions:
        if acq.daypart is Daypart.MORNING and acq.gesture_label in train_labels:
            train.append(acq)
        else:
            held_out.append(acq)
    return train, held_out
