import math

import numpy as np
import pytest

from dfframe import models, pipeline, training
from dfframe.errors import DataError, DivergenceError, ParameterError
from dfframe.training import EarlyStopping, TrainConfig, TrainLog, compute_class_weights, fit_loop


# ---- class weights ---------------------------------------------------------

def test_balanced_weights():
    w = compute_class_weights([0, 1, 0, 1])
    assert (w.real, w.fake) == (1.0, 1.0)


def test_three_fakes_per_real():
    w = compute_class_weights([1, 1, 1, 0] * 5)
    assert (w.real, w.fake) == (3.0, 1.0)


def test_dataset_proportions():
    labels = np.r_[np.ones(2998), np.zeros(1000)]
    w = compute_class_weights(labels)
    assert w.real == pytest.approx(2.998, abs=1e-12)
    assert w.fake == 1.0


def test_mirrored_when_reals_dominate():
    w = compute_class_weights([0, 0, 0, 0, 1, 1])
    assert (w.real, w.fake) == (1.0, 2.0)


def test_single_class_rejected():
    with pytest.raises(DataError):
        compute_class_weights([1, 1, 1])


# ---- early stopping --------------------------------------------------------

def _run(curve, max_epochs=100, patience=10):
    stopper = EarlyStopping(patience, max_epochs)
    for epoch in range(1, max_epochs + 1):
        if stopper.update(epoch, curve(epoch)):
            return epoch, stopper
    raise AssertionError("never stopped")


def test_constant_accuracy_stops_at_11():
    epoch, s = _run(lambda e: 0.7)
    assert (epoch, s.reason, s.best_epoch) == (11, "plateau", 1)


def test_monotone_runs_to_100():
    epoch, s = _run(lambda e: e / 1000)
    assert (epoch, s.reason, s.best_epoch) == (100, "max_epochs", 100)


@pytest.mark.parametrize("peak", [1, 5, 23, 89])
def test_plateau_fires_at_best_plus_patience(peak):
    epoch, s = _run(lambda e: min(e, peak) / 100)
    assert (epoch, s.reason, s.best_epoch) == (peak + 10, "plateau", peak)


def test_late_peak_hits_max_epochs():
    epoch, s = _run(lambda e: min(e, 95) / 100)
    assert (epoch, s.reason) == (100, "max_epochs")


def test_ties_do_not_count_as_improvement():
    curve = [0.5, 0.6, 0.6, 0.6] + [0.6] * 20
    epoch, s = _run(lambda e: curve[e - 1])
    assert (epoch, s.best_epoch) == (12, 2)


def test_fit_loop_restores_best_snapshot():
    accs = [0.5, 0.8, 0.7, 0.6] + [0.6] * 20
    state = {"epoch": 0}
    restored = []
    log = fit_loop(run_epoch=lambda e: state.update(epoch=e) or 1.0 / e,
                   validate=lambda: accs[state["epoch"] - 1],
                   snapshot=lambda: state["epoch"],
                   restore=restored.append,
                   config=TrainConfig(max_epochs=30, patience=10))
    assert restored == [2]
    assert (log.stopped_epoch, log.best_epoch, log.stop_reason) == (12, 2, "plateau")
    assert log.best_val_accuracy == 0.8
    assert log.best_epoch <= log.stopped_epoch - 10


def test_nan_loss_raises_divergence_with_epoch():
    with pytest.raises(DivergenceError) as info:
        fit_loop(lambda e: math.nan if e == 3 else 1.0, lambda: 0.5, lambda: None, lambda s: None,
                 TrainConfig(max_epochs=20, patience=5))
    assert info.value.epoch == 3


def test_train_config_validation():
    with pytest.raises(ParameterError):
        TrainConfig(max_epochs=10, patience=10)
    with pytest.raises(ParameterError):
        TrainConfig(frames_per_video=41)
    with pytest.raises(ParameterError):
        TrainConfig(class_weights=(0.0, 1.0))


def test_train_log_jsonl_round_trip():
    log = TrainLog(epochs=[training.EpochRecord(1, 0.5, 0.75), training.EpochRecord(2, 0.25, 0.8)],
                   stopped_epoch=2, stop_reason="max_epochs", best_epoch=2, best_val_accuracy=0.8)
    text = log.to_jsonl()
    assert len(text.splitlines()) == 3
    assert TrainLog.from_jsonl(text) == log


# ---- train() ---------------------------------------------------------------

def _toy_splits(seed=0):
    """Videos whose frames are bright (fake) or dark (real) plus noise."""
    rng = np.random.default_rng(seed)

    def split(n):
        labels = np.array([0, 1] * (n // 2))
        frames = rng.normal(0.5, 0.1, size=(n, 40, 1, 16, 16)) + 0.15 * (labels[:, None, None, None, None] - 0.5)
        return pipeline.SplitArrays(frames, labels, ["t"] * n, [f"{seed}-{i}" for i in range(n)])

    return {"train": split(16), "val": split(8)}


def _small_cfg():
    return TrainConfig(max_epochs=6, patience=3, learning_rate=3e-3, batch_size=16, frames_per_video=4, seed=1)


def test_train_is_deterministic():
    logs, states = [], []
    for _ in range(2):
        model = models.build_auto(models.CNNConfig(seed=5))
        logs.append(training.train(model, _toy_splits(), _small_cfg()))
        states.append({k: v.copy() for k, v in model.network.state_dict().items()})
    assert logs[0] == logs[1]
    assert all(np.array_equal(states[0][k], states[1][k]) for k in states[0])


def test_restored_model_reproduces_best_accuracy():
    data = _toy_splits()
    model = models.build_auto(models.CNNConfig(seed=6))
    log = training.train(model, data, _small_cfg())
    acc = training.video_accuracy(model.predict_videos(data["val"].frames), data["val"].labels)
    assert acc == log.best_val_accuracy


def test_sequence_training_leaves_extractor_untouched():
    data = _toy_splits()
    auto = models.build_auto(models.CNNConfig(seed=2))
    seq = models.build_sequence_model(models.truncate_to_extractor(auto), models.SequenceConfig(hidden=4, dense=4))
    before = {k: p.value.tobytes() for k, p in seq.extractor.network.parameters().items()}
    log = training.train(seq, data, _small_cfg())
    after = {k: p.value.tobytes() for k, p in seq.extractor.network.parameters().items()}
    assert before == after
    acc = training.video_accuracy(seq.predict_videos(data["val"].frames), data["val"].labels)
    assert acc == log.best_val_accuracy


def test_empty_split_rejected():
    data = _toy_splits()
    data["val"] = pipeline.SplitArrays(np.empty((0, 40, 1, 16, 16)), np.empty(0, int), [], [])
    with pytest.raises(DataError):
        training.train(models.build_auto(), data, _small_cfg())
