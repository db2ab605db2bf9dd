import json

import numpy as np
import pytest

from tests.conftest import make_network
from thermal_gesture.models.thermal import Acquisition, Daypart, GestureLabel
from thermal_gesture.models.track import GestureClass, GestureEvent
from thermal_gesture.services.errors import ConfigError
from thermal_gesture.services.pipeline import (
    EmptyDatasetError,
    GesturePipeline,
    MmvOnlyPipeline,
    PipelineConfig,
    day_night_split,
    evaluate,
    evaluate_async,
    process_stream,
    score_acquisition,
    _StreamBase,
)


@pytest.fixture
def cfg():
    return PipelineConfig()


@pytest.fixture
def five_class_threshold():
    """Votes Vertical whenever the single neuron fires, NoGesture otherwise"""
    weights = np.zeros((1, 5))
    weights[0, GestureClass.VERTICAL.index] = 1.0
    bias = np.zeros(5)
    bias[GestureClass.NO_GESTURE.index] = 0.5
    bias[GestureClass.VERTICAL.index] = -0.5
    return make_network(np.ones((32, 1)), np.zeros((1, 1)), [1], weights, bias)


def test_config_from_settings_ignores_none():
    cfg = PipelineConfig.from_settings(n_c=None, beta=0.25)
    assert cfg.n_c == 5
    assert cfg.beta == 0.25
    assert cfg.time_steps == 96
    assert cfg.rpca.lam == cfg.rpca_lambda


def test_rpca_settings_reach_the_solver():
    cfg = PipelineConfig.from_settings(rpca_max_iter=40, rpca_mu_growth=1.2)
    assert cfg.rpca.max_iter == 40
    assert cfg.rpca.mu_growth == 1.2
    with pytest.raises(ConfigError):
        PipelineConfig(rpca_mu_growth=0.9)


def test_stream_base_requires_window_handling(threshold_detector):
    class Incomplete(_StreamBase):
        def reset(self) -> None:
            pass

    with pytest.raises(TypeError):
        Incomplete(threshold_detector, PipelineConfig(), num_classes=2)


def test_config_rejects_bad_values():
    with pytest.raises(ConfigError):
        PipelineConfig(n_c=1)
    with pytest.raises(ConfigError):
        PipelineConfig(beta=1.5)
    with pytest.raises(ConfigError):
        PipelineConfig(track_length=2)


def test_network_must_fit_windows(cfg, threshold_detector):
    long_period = make_network(np.ones((32, 1)), np.zeros((1, 1)), [40], [[0.0, 1.0]], [0.0, 0.0])
    with pytest.raises(ConfigError):
        GesturePipeline(long_period, PipelineConfig(n_c=2))
    narrow = make_network(np.ones((16, 1)), np.zeros((1, 1)), [1], [[0.0, 1.0]], [0.0, 0.0])
    with pytest.raises(ConfigError):
        GesturePipeline(narrow, cfg)
    with pytest.raises(ConfigError):
        MmvOnlyPipeline(threshold_detector, cfg)


def test_sleeping_detector_never_runs_rpca(cfg, never_detector, scene):
    pipeline = GesturePipeline(never_detector, cfg)
    events = pipeline.process_stream(scene.acquisition(GestureLabel.CIR_CW))
    assert events == []
    assert pipeline.counters.rpca_calls == 0
    assert pipeline.counters.detections == 0
    assert pipeline.counters.windows == 52 - 4


def test_static_scene_has_no_events(cfg, threshold_detector, scene):
    pipeline = GesturePipeline(threshold_detector, cfg)
    assert pipeline.process_stream(scene.static_frames(40)) == []
    assert pipeline.counters.rpca_calls == 0


def test_clockwise_circle_gives_one_event(cfg, threshold_detector, scene):
    acq = scene.acquisition(GestureLabel.CIR_CW, n_gestures=1, gap=20)
    pipeline = GesturePipeline(threshold_detector, cfg)
    events = pipeline.process_stream(acq)
    assert [e.predicted for e in events] == [GestureClass.CIR_CW]
    event = events[0]
    assert 20 <= event.start_index <= event.end_index < 40
    assert len(event.track) == cfg.track_length
    assert 0 < pipeline.counters.rpca_calls < len(acq)
    assert not pipeline.awake


def test_gestures_are_reported_in_order(cfg, threshold_detector, scene):
    acq = scene.acquisition(GestureLabel.ALL_GESTURES, n_gestures=2, gap=20)
    events = process_stream(acq, cfg, threshold_detector)
    assert [e.predicted for e in events] == [GestureClass.CIR_CW, GestureClass.CIR_CCW]
    assert events[0].end_index < events[1].start_index


def test_mmv_only_votes_into_one_event(cfg, five_class_threshold, scene):
    pipeline = MmvOnlyPipeline(five_class_threshold, cfg)
    events = pipeline.process_stream(scene.acquisition(GestureLabel.CIR_CW, gap=20))
    assert len(events) == 1
    assert events[0].predicted is GestureClass.VERTICAL
    assert events[0].track is None


def test_score_no_gesture():
    acq = Acquisition("no-gesture-m", Daypart.MORNING, GestureLabel.NO_GESTURE, [])
    result = score_acquisition(acq, [])
    assert (result.samples, result.correct, result.missed) == (1, 1, 0)
    result = score_acquisition(acq, [GestureEvent(3, 9, GestureClass.VERTICAL)] * 2)
    assert (result.samples, result.correct) == (2, 0)


def test_score_gesture_counts_misses():
    acq = Acquisition("hor-gesture-n", Daypart.NIGHT, GestureLabel.HORIZONTAL, [], gesture_count=3)
    result = score_acquisition(acq, [GestureEvent(3, 9, GestureClass.HORIZONTAL)])
    assert (result.samples, result.correct, result.missed) == (3, 1, 2)
    unknown = Acquisition("hor-gesture-n", Daypart.NIGHT, GestureLabel.HORIZONTAL, [])
    assert score_acquisition(unknown, []).missed == 1
    assert score_acquisition(unknown, [GestureEvent(3, 9, GestureClass.VERTICAL)] * 2).samples == 2


@pytest.fixture
def small_dataset(quiet_scene):
    return [
        quiet_scene.acquisition(GestureLabel.VERTICAL, n_gestures=2, gap=6, daypart=Daypart.NIGHT),
        quiet_scene.acquisition(GestureLabel.NO_GESTURE, gap=6),
        quiet_scene.acquisition(GestureLabel.CIR_CW, gap=6),
        quiet_scene.acquisition(GestureLabel.ALL_GESTURES, gap=6),
    ]


def test_evaluate_with_sleeping_detector(cfg, never_detector, small_dataset, caplog):
    report = evaluate(small_dataset, cfg, never_detector)
    assert [r.name for r in report.acquisitions] == ["cirCW-gesture-m", "no-gesture-m", "vert-gesture-n"]
    assert report.total_samples == 4
    assert report.accuracy == pytest.approx(0.25)
    assert report.confusion[GestureClass.VERTICAL.index, GestureClass.NO_GESTURE.index] == 2
    assert report.params_bytes == 26
    assert report.avg_flops > 0
    assert "all-gesture-m" in caplog.text


def test_evaluate_mmv_only(cfg, small_dataset):
    always_circle = make_network(np.zeros((32, 1)), np.zeros((1, 1)), [1], np.zeros((1, 5)), [0, 1, 0, 0, 0])
    report = evaluate(small_dataset, cfg, always_circle, mode="mmv-only")
    assert report.mode == "mmv-only"
    # one never-ending vote per recording, flushed at the end
    assert [r.predictions for r in report.acquisitions] == [[GestureClass.CIR_CW]] * 3
    assert report.acquisitions[0].correct == 1
    assert all(r.rpca_calls == 0 for r in report.acquisitions)


def test_evaluate_rejects_unknown_mode(cfg, never_detector, small_dataset):
    with pytest.raises(ConfigError):
        evaluate(small_dataset, cfg, never_detector, mode="fast")


def test_evaluate_empty(cfg, never_detector, small_dataset):
    with pytest.raises(EmptyDatasetError):
        evaluate([], cfg, never_detector)
    with pytest.raises(EmptyDatasetError):
        evaluate(small_dataset[3:], cfg, never_detector)


@pytest.mark.asyncio
async def test_evaluate_async_matches_sequential(cfg, threshold_detector, small_dataset):
    sequential = evaluate(small_dataset, cfg, threshold_detector)
    concurrent = await evaluate_async(small_dataset, cfg, threshold_detector)
    assert np.array_equal(sequential.confusion, concurrent.confusion)
    assert [r.name for r in concurrent.acquisitions] == [r.name for r in sequential.acquisitions]
    assert [r.rpca_calls for r in concurrent.acquisitions] == [r.rpca_calls for r in sequential.acquisitions]


def test_report_outputs(cfg, never_detector, small_dataset):
    report = evaluate(small_dataset, cfg, never_detector)
    lines = report.to_csv().splitlines()
    assert lines[0] == "true\\predicted,NoGesture,CirCW,CirCCW,Vertical,Horizontal"
    assert lines[1] == "NoGesture,1,0,0,0,0"

    records = [json.loads(line) for line in report.to_json_lines().splitlines()]
    assert records[0]["type"] == "summary"
    assert records[0]["samples"] == 4
    assert [r["name"] for r in records[1:]] == [r.name for r in report.acquisitions]
    assert records[-1]["missed"] == 2


def test_day_night_split(scene):
    acqs = [
        scene.acquisition(GestureLabel.NO_GESTURE, gap=2),
        scene.acquisition(GestureLabel.ALL_GESTURES, gap=2),
        scene.acquisition(GestureLabel.NO_GESTURE, gap=2, daypart=Daypart.NIGHT),
        scene.acquisition(GestureLabel.VERTICAL, gap=2),
    ]
    train, held_out = day_night_split(acqs)
    assert [a.name for a in train] == ["no-gesture-m", "all-gesture-m"]
    assert [a.name for a in held_out] == ["no-gesture-n", "vert-gesture-m"]
