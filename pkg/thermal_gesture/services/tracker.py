"""Hand-blob centroid extraction and track filtering"""
import logging
from typing import Optional

import numpy as np
from scipy import ndimage

from thermal_gesture.models.track import Centroid, GestureTrack
from thermal_gesture.services.errors import TrackerError

logger = logging.getLogger(__name__)


def extract_centroid(sparse_frame: np.ndarray, theta_blob: float) -> Optional[Centroid]:
    """|S|-weighted centroid of the dominant 4-connected blob, or None

    The dominant blob has the most pixels above `theta_blob`; ties go to
    the larger summed |S|, then to the blob whose first pixel comes first
    in row-major order.
    """
    if theta_blob <= 0:
        raise TrackerError(f"Blob threshold must be positive, got {theta_blob}")
    magnitude = np.abs(np.asarray(sparse_frame, dtype=np.float64))
    if magnitude.ndim != 2:
        raise TrackerError(f"Sparse frame must be 2-D, got shape {magnitude.shape}")

    mask = magnitude > theta_blob
    labels, count = ndimage.label(mask)  # default structure is 4-connected
    if count == 0:
        return None

    index = np.arange(1, count + 1)
    sizes = ndimage.sum_labels(mask, labels, index)
    weights = ndimage.sum_labels(magnitude, labels, index)
    flat = labels.ravel()
    first_pixel = np.array([np.flatnonzero(flat == label)[0] for label in index])

    # lexsort keys run from least to most significant
    order = np.lexsort((first_pixel, -weights, -sizes))
    chosen = int(index[order[0]])

    y, x = ndimage.center_of_mass(magnitude, labels, chosen)
    return Centroid(x=x, y=y)


def lowpass_update(track: GestureTrack, p: Centroid, k: int = 0) -> GestureTrack:
    """Feed one raw centroid through the track's low-pass filter"""
    filtered = track.add_point(p, k)
    logger.debug(f"Track point k={k}: raw=({p.x:.2f}, {p.y:.2f}) filtered=({filtered.x:.2f}, {filtered.y:.2f})")
    return track
