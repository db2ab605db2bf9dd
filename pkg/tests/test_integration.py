"""End-to-end acceptance runs on synthetic data"""
import time

import numpy as np
import pytest

from thermal_gesture.models.thermal import Daypart, GestureLabel
from thermal_gesture.models.track import GestureClass
from thermal_gesture.services.checkpoint import load_checkpoint, save_checkpoint
from thermal_gesture.services.mmv_train import TrainConfig, split_dataset, train_detector
from thermal_gesture.services.pipeline import PipelineConfig, evaluate
from thermal_gesture.services.synthetic import SceneGenerator
from thermal_gesture.services.thermal_io import load_directory, write_acquisition

SINGLE_CLASSES = [
    GestureLabel.NO_GESTURE,
    GestureLabel.CIR_CW,
    GestureLabel.CIR_CCW,
    GestureLabel.VERTICAL,
    GestureLabel.HORIZONTAL,
]


@pytest.fixture(scope="module")
def suite():
    """50 single-gesture sequences per class plus 50 without a gesture"""
    generator = SceneGenerator(seed=2024, noise_sigma=0.02)
    acquisitions = []
    for label in SINGLE_CLASSES:
        for i in range(50):
            daypart = Daypart.MORNING if i % 2 else Daypart.NIGHT
            name = f"{label.value}-{i:02d}"
            acquisitions.append(generator.acquisition(label, gap=20, daypart=daypart, name=name))
    return acquisitions


@pytest.fixture(scope="module")
def trained():
    """C = 125 detector trained on 500 synthetic windows with the default schedule"""
    samples = SceneGenerator(seed=11).detection_samples(500, n_c=5, theta_s=0.2)
    train, val = split_dataset(samples, 0.7, seed=0)
    return train_detector(train, val, TrainConfig(neurons=125, epochs=50))


@pytest.mark.slow
def test_pipeline_accuracy_with_trained_detector(suite, trained):
    net, _ = trained
    start = time.monotonic()
    report = evaluate(suite, PipelineConfig(), net)
    elapsed = time.monotonic() - start

    assert len(report.acquisitions) == 250
    assert report.accuracy >= 0.95
    assert elapsed < 300


@pytest.mark.slow
def test_pipeline_stages_with_threshold_detector(suite, threshold_detector):
    report = evaluate(suite, PipelineConfig(), threshold_detector)

    assert report.accuracy >= 0.95
    for cls in GestureClass:
        row = report.confusion[cls.index]
        assert row[cls.index] >= 0.9 * row.sum()


@pytest.mark.slow
def test_detector_training_acceptance(trained, temp_dir):
    net, history = trained

    assert history.best_val_acc >= 0.9
    assert history.best_epoch >= 25
    path = save_checkpoint(net, temp_dir / "detector.mmv")
    loaded = load_checkpoint(path, time_steps=96)
    for matrix in (loaded.connectivity.input_conn, loaded.connectivity.recurrent_conn):
        assert set(np.unique(matrix)) <= {-1, 0, 1}


@pytest.mark.slow
def test_day_night_protocol_from_disk(temp_dir, threshold_detector):
    generator = SceneGenerator(seed=5)
    for daypart in Daypart:
        for label in GestureLabel:
            count = 4 if label is GestureLabel.ALL_GESTURES else 2
            acq = generator.acquisition(label, n_gestures=count, daypart=daypart)
            write_acquisition(acq, temp_dir / f"{acq.name}.csv")

    acquisitions = load_directory(temp_dir)
    night = [a for a in acquisitions if a.daypart is Daypart.NIGHT]
    report = evaluate(night, PipelineConfig(), threshold_detector)
    # gesture counts are not stored on disk, so extra events count as samples
    assert report.total_samples >= 5
    assert report.accuracy >= 0.8
