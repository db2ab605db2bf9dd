import numpy as np
import pytest

from thermal_gesture.models.track import Centroid, GestureTrack
from thermal_gesture.services.errors import ConfigError, TrackerError
from thermal_gesture.services.tracker import extract_centroid, lowpass_update


def test_empty_frame_has_no_centroid():
    assert extract_centroid(np.zeros((24, 32)), 0.1) is None
    # exactly at threshold is not above it
    assert extract_centroid(np.full((24, 32), 0.1), 0.1) is None


def test_weighted_centroid_of_single_blob():
    S = np.zeros((10, 10))
    S[3, 2] = 1.0
    S[3, 3] = -3.0  # magnitude counts
    p = extract_centroid(S, 0.5)
    assert p == Centroid(x=2.75, y=3.0)


def test_largest_blob_wins():
    S = np.zeros((10, 10))
    S[1, 1] = 9.0
    S[6, 5:8] = 1.0
    p = extract_centroid(S, 0.5)
    assert p.x == pytest.approx(6.0)
    assert p.y == pytest.approx(6.0)


def test_size_tie_goes_to_heavier_blob():
    S = np.zeros((10, 10))
    S[1, 1:3] = 1.0
    S[7, 4:6] = 2.0
    p = extract_centroid(S, 0.5)
    assert (p.x, p.y) == (4.5, 7.0)


def test_full_tie_goes_to_first_blob_in_row_major_order():
    S = np.zeros((8, 8))
    S[5, 1] = 1.0
    S[2, 4] = 1.0
    assert extract_centroid(S, 0.5) == Centroid(x=4.0, y=2.0)


def test_diagonal_pixels_are_separate_blobs():
    S = np.zeros((6, 6))
    S[1, 1] = 1.0
    S[2, 2] = 1.0
    S[4, 4] = 1.0
    S[4, 5] = 1.0
    assert extract_centroid(S, 0.5) == Centroid(x=4.5, y=4.0)


def test_extract_rejects_bad_arguments():
    with pytest.raises(TrackerError):
        extract_centroid(np.zeros((4, 4)), 0.0)
    with pytest.raises(TrackerError):
        extract_centroid(np.zeros(16), 0.1)


def test_lowpass_examples():
    track = GestureTrack(beta=0.5, max_length=10)
    lowpass_update(track, Centroid(0.0, 0.0), k=4)
    lowpass_update(track, Centroid(2.0, 4.0), k=5)
    lowpass_update(track, Centroid(2.0, 4.0), k=6)
    assert track.points == [Centroid(0.0, 0.0), Centroid(1.0, 2.0), Centroid(1.5, 3.0)]
    assert (track.start_index, track.end_index) == (4, 6)


def test_beta_zero_passes_raw_points():
    track = GestureTrack(beta=0.0)
    for i in range(4):
        lowpass_update(track, Centroid(float(i), 2.0 * i), k=i)
    assert track.points == [Centroid(float(i), 2.0 * i) for i in range(4)]


def test_lowpass_stays_inside_the_raw_hull():
    rng = np.random.default_rng(42)
    track = GestureTrack(beta=0.7, max_length=10)
    xs, ys = [], []
    for k in range(1000):
        raw = Centroid(rng.uniform(0, 31), rng.uniform(0, 23))
        xs.append(raw.x)
        ys.append(raw.y)
        filtered = lowpass_update(track, raw, k).points[-1]
        assert min(xs) - 1e-9 <= filtered.x <= max(xs) + 1e-9
        assert min(ys) - 1e-9 <= filtered.y <= max(ys) + 1e-9
        assert filtered.within(24, 32)
        assert len(track) == min(k + 1, 10)


def test_track_rejects_bad_beta():
    with pytest.raises(ConfigError):
        GestureTrack(beta=1.5)
