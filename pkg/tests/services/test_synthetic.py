import numpy as np
import pytest

from thermal_gesture.models.thermal import Daypart, GestureLabel
from thermal_gesture.models.track import GestureClass
from thermal_gesture.services.errors import ConfigError
from thermal_gesture.services.synthetic import GESTURE_FRAMES, SceneGenerator


def test_acquisition_layout(scene):
    acq = scene.acquisition(GestureLabel.HORIZONTAL, n_gestures=2, gap=5, daypart=Daypart.NIGHT)
    assert acq.name == "hor-gesture-n"
    assert len(acq) == 5 + 2 * (GESTURE_FRAMES + 5)
    assert acq.gesture_count == 2
    assert [f.timestamp_index for f in acq.frames] == list(range(len(acq)))


def test_no_gesture_has_zero_count(scene):
    acq = scene.acquisition(GestureLabel.NO_GESTURE, gap=5)
    assert acq.gesture_count == 0
    assert len(acq) == 5 + GESTURE_FRAMES + 5


def test_same_seed_same_scene():
    first = SceneGenerator(seed=4).acquisition(GestureLabel.CIR_CW, gap=3)
    second = SceneGenerator(seed=4).acquisition(GestureLabel.CIR_CW, gap=3)
    assert np.array_equal(first.stack, second.stack)


@pytest.mark.parametrize("gesture", [GestureClass.VERTICAL, GestureClass.HORIZONTAL])
def test_line_paths_move_along_one_axis(quiet_scene, gesture):
    xs, ys = zip(*quiet_scene.path(gesture))
    moving, fixed = (ys, xs) if gesture is GestureClass.VERTICAL else (xs, ys)
    assert len(set(fixed)) == 1
    assert abs(moving[-1] - moving[0]) > 15


def test_no_path_for_no_gesture(quiet_scene):
    with pytest.raises(ConfigError):
        quiet_scene.path(GestureClass.NO_GESTURE)


def test_detection_samples_alternate(scene):
    samples = scene.detection_samples(6, n_c=5, theta_s=0.2)
    assert [label for _, label in samples] == [1, 0, 1, 0, 1, 0]
    assert all(raster.bits.shape == (96, 32) for raster, _ in samples)
    assert all(raster.bits.any() for raster, label in samples if label == 1)


def test_invalid_parameters():
    with pytest.raises(ConfigError):
        SceneGenerator(noise_sigma=-0.1)
