import pytest

from thermal_gesture.models.track import Centroid, GestureClass, GestureEvent, GestureTrack
from thermal_gesture.services.errors import ConfigError, PipelineError


@pytest.fixture
def track():
    return GestureTrack(beta=0.5, max_length=3, n_gap=2)


def test_gesture_class_index_order():
    assert [c.index for c in GestureClass] == [0, 1, 2, 3, 4]
    assert GestureClass.from_index(3) is GestureClass.VERTICAL


def test_track_is_a_ring_buffer(track):
    for k in range(5):
        track.add_point(Centroid(float(k), 0.0), k=k)
    assert len(track) == 3
    assert track.is_full
    assert (track.start_index, track.end_index) == (2, 4)


def test_missing_points_close_the_track(track):
    track.add_point(Centroid(1.0, 1.0), k=0)
    track.mark_missing()
    assert not track.is_closed
    track.mark_missing()
    assert track.is_closed
    track.add_point(Centroid(2.0, 2.0), k=3)
    assert not track.is_closed


def test_reset_clears_filter_state(track):
    track.add_point(Centroid(4.0, 4.0), k=0)
    track.reset()
    assert len(track) == 0
    assert track.start_index is None
    assert track.add_point(Centroid(0.0, 2.0), k=1) == Centroid(0.0, 2.0)


def test_copy_is_independent(track):
    track.add_point(Centroid(1.0, 1.0), k=0)
    snapshot = track.copy()
    track.add_point(Centroid(3.0, 3.0), k=1)
    assert len(snapshot) == 1
    assert snapshot.max_length == 3


def test_to_csv(track):
    track.add_point(Centroid(0.0, 0.0), k=7)
    track.add_point(Centroid(2.0, 4.0), k=8)
    assert track.to_csv().splitlines() == [
        "k,x_raw,y_raw,x_filt,y_filt",
        "7,0.0,0.0,0.0,0.0",
        "8,2.0,4.0,1.0,2.0",
    ]


def test_invalid_track_parameters():
    with pytest.raises(ConfigError):
        GestureTrack(max_length=0)


def test_centroid_bounds():
    assert Centroid(31.0, 23.0).within(24, 32)
    assert not Centroid(-0.5, 3.0).within(24, 32)


def test_event_order():
    with pytest.raises(PipelineError):
        GestureEvent(start_index=9, end_index=3, predicted=GestureClass.CIR_CW)
