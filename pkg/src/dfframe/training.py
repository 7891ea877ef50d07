"""Training loop: Adam, class-weighted BCE, early stopping on validation accuracy."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DataError, DivergenceError, ParameterError
from .nn import Adam, ClassWeights, Sequential, Standardize, weighted_bce_batch


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 100
    patience: int = 10
    learning_rate: float = 1e-3
    batch_size: int = 32
    seed: int = 0
    class_weights: object = "auto"       # "auto" or (weight_real, weight_fake)
    frames_per_video: int = 40           # frames sampled per video per epoch (frame models)

    def __post_init__(self):
        if self.max_epochs < 1 or self.patience < 1:
            raise ParameterError("max_epochs and patience must be positive")
        if self.patience >= self.max_epochs:
            raise ParameterError(f"patience ({self.patience}) must be < max_epochs ({self.max_epochs})")
        if self.learning_rate <= 0 or self.batch_size < 1:
            raise ParameterError("learning rate and batch size must be positive")
        if not 1 <= self.frames_per_video <= 40:
            raise ParameterError("frames_per_video must be in [1, 40]")
        if self.class_weights != "auto":
            real, fake = self.class_weights
            ClassWeights(float(real), float(fake))


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_accuracy: float


@dataclass
class TrainLog:
    epochs: list = field(default_factory=list)
    stopped_epoch: int = 0
    stop_reason: str = ""
    best_epoch: int = 0
    best_val_accuracy: float = float("nan")

    def to_jsonl(self) -> str:
        lines = [json.dumps({"record": "epoch", **asdict(e)}, sort_keys=True) for e in self.epochs]
        lines.append(json.dumps({"record": "summary", "stopped_epoch": self.stopped_epoch,
                                 "stop_reason": self.stop_reason, "best_epoch": self.best_epoch,
                                 "best_val_accuracy": self.best_val_accuracy}, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "TrainLog":
        log = cls()
        for line in text.splitlines():
            rec = json.loads(line)
            kind = rec.pop("record")
            if kind == "epoch":
                log.epochs.append(EpochRecord(**rec))
            else:
                for k, v in rec.items():
                    setattr(log, k, v)
        return log


def compute_class_weights(labels) -> ClassWeights:
    """Inverse-frequency weights; the more common class gets weight 1."""
    labels = np.asarray(labels)
    n_fake = int(np.sum(labels == 1))
    n_real = int(np.sum(labels == 0))
    if n_fake == 0 or n_real == 0:
        raise DataError(f"class weights need both classes (real={n_real}, fake={n_fake})")
    if n_fake >= n_real:
        return ClassWeights(real=n_fake / n_real, fake=1.0)
    return ClassWeights(real=1.0, fake=n_real / n_fake)


class EarlyStopping:
    """Stop once validation accuracy has not strictly beaten the best value
    for ``patience`` consecutive epochs, or at ``max_epochs``."""

    def __init__(self, patience: int, max_epochs: int):
        self.patience = patience
        self.max_epochs = max_epochs
        self.best = -np.inf
        self.best_epoch = 0
        self.reason = ""

    def update(self, epoch: int, accuracy: float) -> bool:
        improved = accuracy > self.best
        if improved:
            self.best = accuracy
            self.best_epoch = epoch
        if epoch >= self.max_epochs:
            self.reason = "max_epochs"
            return True
        if epoch - self.best_epoch >= self.patience:
            self.reason = "plateau"
            return True
        return False


def fit_loop(run_epoch, validate, snapshot, restore, config: TrainConfig) -> TrainLog:
    """Generic epoch loop. ``run_epoch(epoch)`` returns the mean training loss;
    ``validate()`` returns validation accuracy. Parameters from the best
    epoch are restored before returning."""
    stopper = EarlyStopping(config.patience, config.max_epochs)
    log = TrainLog()
    best_state = snapshot()
    for epoch in range(1, config.max_epochs + 1):
        loss = float(run_epoch(epoch))
        if not np.isfinite(loss):
            raise DivergenceError(epoch)
        acc = float(validate())
        log.epochs.append(EpochRecord(epoch, loss, acc))
        if acc > stopper.best:
            best_state = snapshot()
        if stopper.update(epoch, acc):
            break
    restore(best_state)
    log.stopped_epoch = epoch
    log.stop_reason = stopper.reason
    log.best_epoch = stopper.best_epoch
    log.best_val_accuracy = stopper.best
    return log


def _weights(config: TrainConfig, labels) -> ClassWeights:
    if config.class_weights == "auto":
        return compute_class_weights(labels)
    real, fake = config.class_weights
    return ClassWeights(float(real), float(fake))


def _fit(net: Sequential, epoch_batches, validate, config: TrainConfig, weights: ClassWeights) -> TrainLog:
    opt = Adam(net.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)

    def run_epoch(epoch):
        total, count = 0.0, 0
        for xb, yb in epoch_batches(rng):
            probs = net.forward(xb, train=True)
            loss, grad = weighted_bce_batch(probs, yb.reshape(-1, 1), weights)
            if not np.isfinite(loss):
                raise DivergenceError(epoch)
            opt.step(net.backward(grad))
            total += loss * len(yb)
            count += len(yb)
        return total / count

    return fit_loop(run_epoch, validate, net.state_dict, net.load_state_dict, config)


def _minibatches(x, y, batch_size, rng):
    order = rng.permutation(len(y))
    for i in range(0, len(order), batch_size):
        idx = order[i:i + batch_size]
        yield x[idx], y[idx]


def fit_arrays(net: Sequential, x, y, validate, config: TrainConfig) -> TrainLog:
    """Train ``net`` on a fixed array of examples with shuffled mini-batches."""
    if len(y) == 0:
        raise DataError("empty training split")
    return _fit(net, lambda rng: _minibatches(x, y, config.batch_size, rng), validate, config, _weights(config, y))


def video_accuracy(probs, labels) -> float:
    return float(np.mean((np.asarray(probs) >= 0.5) == (np.asarray(labels) == 1)))


def train(model, data, config: TrainConfig = TrainConfig()) -> TrainLog:
    """Train a framework model on preprocessed splits (``{"train": ..., "val": ...}``).

    Frozen extractors are run once up front; only trainable layers see
    gradient steps.
    """
    from .models import FrameClassifier, SequenceClassifier

    tr, va = data.get("train"), data.get("val")
    if tr is None or va is None or len(tr) == 0 or len(va) == 0:
        raise DataError("training needs non-empty train and val splits")
    weights = _weights(config, tr.labels)

    if isinstance(model, SequenceClassifier):
        if not model.extractor.frozen:
            raise ParameterError("sequence models train with a frozen extractor")
        f_tr = model.extractor.feature_matrices(tr.frames)
        f_va = model.extractor.feature_matrices(va.frames)
        if isinstance(model.head.layers[0], Standardize):
            model.head.layers[0].fit(f_tr)
        return _fit(model.head, lambda rng: _minibatches(f_tr, tr.labels, config.batch_size, rng),
                    lambda: video_accuracy(model.predict_features(f_va), va.labels), config, weights)

    if not isinstance(model, FrameClassifier):
        raise TypeError(f"cannot train {type(model).__name__}")

    if model.extractor_frozen:
        extractor = model.extractor_network()
        head = model.head_network()
        v, n_frames = len(tr), tr.frames.shape[1]
        feats_tr = extractor.predict(tr.frames.reshape((-1,) + tr.frames.shape[2:])).reshape(v, n_frames, -1)
        feats_va = extractor.predict(va.frames.reshape((-1,) + va.frames.shape[2:]))

        def validate():
            probs = head.predict(feats_va)[:, 0].reshape(len(va), -1).mean(axis=1)
            return video_accuracy(probs, va.labels)

        return _fit(head, lambda rng: _frame_batches(feats_tr, tr.labels, config, rng), validate, config, weights)

    return _fit(model.network, lambda rng: _frame_batches(tr.frames, tr.labels, config, rng),
                lambda: video_accuracy(model.predict_videos(va.frames), va.labels), config, weights)


def _frame_batches(videos, labels, config, rng):
    """Sample ``frames_per_video`` frames from each video, then mini-batch them."""
    v, t = videos.shape[:2]
    k = config.frames_per_video
    if k == t:
        picks = np.tile(np.arange(t), (v, 1))
    else:
        picks = np.stack([rng.choice(t, size=k, replace=False) for _ in range(v)])
    frames = videos[np.arange(v)[:, None], picks].reshape((v * k,) + videos.shape[2:])
    ys = np.repeat(labels, k)
    yield from _minibatches(frames, ys, config.batch_size, rng)
