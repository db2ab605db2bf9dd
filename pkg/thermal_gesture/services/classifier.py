"""Rule-based classification of completed hand tracks"""
import logging
from typing import Sequence, Union

import numpy as np

from thermal_gesture.config.settings import settings
from thermal_gesture.models.track import Centroid, GestureClass, GestureTrack, TrackFeatures
from thermal_gesture.services.errors import ClassifierError

logger = logging.getLogger(__name__)

MIN_TRACK_POINTS = 3

TrackLike = Union[GestureTrack, Sequence[Centroid]]


class TrackTooShortError(ClassifierError):
    """Exception raised when a track has too few points for the angle trend"""
    pass


def _coordinates(track: TrackLike) -> np.ndarray:
    points = track.points if isinstance(track, GestureTrack) else list(track)
    if len(points) < MIN_TRACK_POINTS:
        raise TrackTooShortError(
            f"Track has {len(points)} points, at least {MIN_TRACK_POINTS} are needed"
        )
    return np.array([[p.x, p.y] for p in points], dtype=np.float64)


def features(track: TrackLike) -> TrackFeatures:
    """Extents, population variances and summed angle change about the track mean"""
    xy = _coordinates(track)
    x, y = xy[:, 0], xy[:, 1]
    angles = np.unwrap(np.arctan2(y - y.mean(), x - x.mean()))
    return TrackFeatures(
        d_x=float(x.max() - x.min()),
        d_y=float(y.max() - y.min()),
        var_x=float(x.var()),
        var_y=float(y.var()),
        angle_trend=float(np.diff(angles).sum()),
    )


def classify_track(
    track: TrackLike,
    theta_c1: float = settings.THETA_C1,
    theta_c2: float = settings.THETA_C2,
) -> GestureClass:
    """Circular when the extents are similar and large, else by dominant variance

    The direction of a circle is the sign of the summed, unwrapped change
    of atan2(y - mean_y, x - mean_x): negative is CirCW, zero or positive is
    CirCCW. Equal variances count as Horizontal.
    """
    if theta_c1 <= 0 or theta_c2 <= 0:
        raise ClassifierError(f"Thresholds must be positive, got {theta_c1}, {theta_c2}")
    f = features(track)

    if abs(f.d_x - f.d_y) < theta_c1 and min(f.d_x, f.d_y) > theta_c2:
        result = GestureClass.CIR_CW if f.angle_trend < 0 else GestureClass.CIR_CCW
    elif f.var_y > f.var_x:
        result = GestureClass.VERTICAL
    else:
        result = GestureClass.HORIZONTAL

    logger.debug(
        f"Track D=({f.d_x:.2f}, {f.d_y:.2f}) var=({f.var_x:.2f}, {f.var_y:.2f}) "
        f"trend={f.angle_trend:.2f} -> {result.value}"
    )
    return result
