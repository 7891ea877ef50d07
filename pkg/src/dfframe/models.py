"""The four detector archetypes: Auto, TAuto, Warp, TWarp.

Auto and Warp score single frames and average the per-frame probabilities
over a 40-frame video. TAuto and TWarp run a frozen per-frame feature
extractor (truncated from Auto / Warp at the last pooling layer) and feed
the resulting feature sequence to an LSTM head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParameterError, PretrainError, ShapeError, StructureError
from .nn import LSTM, Conv2D, Dense, Dropout, Flatten, MaxPool2D, Param, ReLU, Sequential, Standardize
from .nn import checkpoint
from .nn.layers import conv_output_size

WINDOW = 40


@dataclass(frozen=True)
class FrameworkCell:
    feature_extraction: str   # "automatic" | "manual"
    temporal: str             # "independent" | "dependent"

    def __post_init__(self):
        if self.feature_extraction not in ("automatic", "manual"):
            raise ParameterError(f"feature_extraction must be automatic/manual, got {self.feature_extraction!r}")
        if self.temporal not in ("independent", "dependent"):
            raise ParameterError(f"temporal must be independent/dependent, got {self.temporal!r}")

    @property
    def name(self) -> str:
        base = "Auto" if self.feature_extraction == "automatic" else "Warp"
        return ("T" + base) if self.temporal == "dependent" else base

    @property
    def dependent(self) -> bool:
        return self.temporal == "dependent"

    @classmethod
    def from_name(cls, name: str) -> "FrameworkCell":
        try:
            return CELLS[name.lower()]
        except KeyError:
            raise ParameterError(f"unknown cell {name!r}; expected one of {sorted(CELLS)}") from None


CELLS = {
    "auto": FrameworkCell("automatic", "independent"),
    "tauto": FrameworkCell("automatic", "dependent"),
    "warp": FrameworkCell("manual", "independent"),
    "twarp": FrameworkCell("manual", "dependent"),
}


@dataclass(frozen=True)
class CNNConfig:
    """Four-stage conv/pool stack. ``head`` lists hidden dense widths placed
    before the final sigmoid node."""

    input_size: int = 16
    channels: int = 1
    widths: tuple = (8, 8, 16, 16)
    kernels: tuple = (3, 3, 3, 3)
    pools: tuple = (2, 2, 2, 2)
    head: tuple = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "kernels", tuple(int(k) for k in self.kernels))
        object.__setattr__(self, "pools", tuple(int(p) for p in self.pools))
        object.__setattr__(self, "head", tuple(int(h) for h in self.head))
        if not (len(self.widths) == len(self.kernels) == len(self.pools)) or not self.widths:
            raise ParameterError("widths, kernels and pools must have the same non-zero length")
        if any(v <= 0 for v in self.widths + self.kernels + self.pools + self.head):
            raise ParameterError("all widths, kernels, pools and head widths must be positive")
        if self.input_size <= 0 or self.channels <= 0:
            raise ParameterError("input size and channels must be positive")


@dataclass(frozen=True)
class SequenceConfig:
    hidden: int = 64
    dense: int = 512
    dropout: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.hidden <= 0:
            raise ParameterError(f"LSTM hidden size must be positive, got {self.hidden}")
        if self.dense <= 0:
            raise ParameterError("dense width must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ParameterError("dropout must be in [0, 1)")


# Meso-4 shaped stack: 256 / (2*2*2*4) = 8 -> 16 * 8 * 8 = 1024 features.
FULL_AUTO = CNNConfig(input_size=256, channels=3, widths=(8, 8, 16, 16), kernels=(3, 5, 5, 5),
                      pools=(2, 2, 2, 4), head=())
# Stand-in for the ResNet50 trunk: 224 / (4*4*2*7) = 1 -> 2048 features.
FULL_WARP = CNNConfig(input_size=224, channels=3, widths=(16, 32, 64, 2048), kernels=(3, 3, 3, 3),
                      pools=(4, 4, 2, 7), head=(1024,))
FULL_SEQUENCE = SequenceConfig(hidden=64, dense=512, dropout=0.5)


def feature_shape(cfg: CNNConfig) -> tuple:
    """(C, H, W) after the last pooling stage, by the shape recurrence."""
    h = cfg.input_size
    for i, (k, p) in enumerate(zip(cfg.kernels, cfg.pools)):
        if k % 2 == 0:
            raise ShapeError(f"stage {i}: kernel {k} must be odd for same padding")
        h = conv_output_size(h, k, 1, k // 2, f"stage {i} conv")
        if h < p:
            raise ShapeError(f"stage {i}: spatial size {h} smaller than pool {p}")
        h = conv_output_size(h, p, p, 0, f"stage {i} pool")
        if h <= 0:
            raise ShapeError(f"stage {i}: non-positive spatial size")
    return (cfg.widths[-1], h, h)


def feature_length(cfg: CNNConfig) -> int:
    c, h, w = feature_shape(cfg)
    return c * h * w


class FeatureExtractor:
    def __init__(self, network: Sequential, feature_length: int, input_shape: tuple):
        self.network = network
        self.feature_length = int(feature_length)
        self.input_shape = tuple(input_shape)

    @property
    def frozen(self) -> bool:
        params = self.network.parameters().values()
        return bool(params) and all(p.frozen for p in params)

    def freeze(self):
        self.network.freeze(True)
        return self

    def __call__(self, frames, batch_size=512):
        frames = np.asarray(frames, dtype=np.float64)
        if frames.shape[1:] != self.input_shape:
            raise ShapeError(f"extractor expects frames {self.input_shape}, got {frames.shape[1:]}")
        return self.network.predict(frames, batch_size)

    def feature_matrices(self, videos, batch_size=512):
        """(V, T, C, H, W) -> (V, T, m)."""
        videos = np.asarray(videos, dtype=np.float64)
        v, t = videos.shape[:2]
        feats = self(videos.reshape((v * t,) + videos.shape[2:]), batch_size)
        return feats.reshape(v, t, self.feature_length)


class FrameClassifier:
    """Single-frame CNN ending in a sigmoid probability; videos are scored by
    the mean of their per-frame probabilities."""

    def __init__(self, cell: FrameworkCell, config: CNNConfig, network: Sequential, boundary: int):
        self.cell = cell
        self.config = config
        self.network = network
        self.boundary = boundary           # index of the Flatten that ends the extractor
        self.pretrain_accuracy = None

    @property
    def input_shape(self):
        return (self.config.channels, self.config.input_size, self.config.input_size)

    def parameters(self) -> dict[str, Param]:
        return self.network.parameters()

    def extractor_network(self) -> Sequential:
        b = self.boundary + 1
        return Sequential(self.network.layers[:b], self.network.names[:b])

    def head_network(self) -> Sequential:
        b = self.boundary + 1
        return Sequential(self.network.layers[b:], self.network.names[b:])

    @property
    def extractor_frozen(self) -> bool:
        return FeatureExtractor(self.extractor_network(), 0, self.input_shape).frozen

    def predict_frames(self, frames, batch_size=512):
        frames = np.asarray(frames, dtype=np.float64)
        if frames.shape[1:] != self.input_shape:
            raise ShapeError(f"{self.cell.name} expects frames {self.input_shape}, got {frames.shape[1:]}")
        return self.network.predict(frames, batch_size)[:, 0]

    def predict_videos(self, videos, batch_size=512):
        videos = _check_videos(videos)
        v, t = videos.shape[:2]
        probs = self.predict_frames(videos.reshape((v * t,) + videos.shape[2:]), batch_size)
        return probs.reshape(v, t).mean(axis=1)


class SequenceClassifier:
    """Frozen extractor -> standardise -> LSTM -> dropout -> dense(relu) -> sigmoid."""

    def __init__(self, cell: FrameworkCell, extractor: FeatureExtractor, head: Sequential, config: SequenceConfig):
        self.cell = cell
        self.extractor = extractor
        self.head = head
        self.config = config

    @property
    def input_shape(self):
        return self.extractor.input_shape

    def parameters(self) -> dict[str, Param]:
        out = {f"extractor.{k}": p for k, p in self.extractor.network.parameters().items()}
        out.update({f"head.{k}": p for k, p in self.head.parameters().items()})
        return out

    def predict_features(self, feats, batch_size=256):
        feats = np.asarray(feats, dtype=np.float64)
        if feats.ndim != 3 or feats.shape[1] != WINDOW:
            raise InputError(f"expected (V, {WINDOW}, m) feature matrices, got {feats.shape}")
        return self.head.predict(feats, batch_size)[:, 0]

    def predict_videos(self, videos, batch_size=256):
        videos = _check_videos(videos)
        return self.predict_features(self.extractor.feature_matrices(videos), batch_size)


def _check_videos(videos):
    videos = np.asarray(videos, dtype=np.float64)
    if videos.ndim != 5:
        raise InputError(f"expected (V, {WINDOW}, C, H, W) videos, got shape {videos.shape}")
    if videos.shape[1] != WINDOW:
        raise InputError(f"each video needs exactly {WINDOW} frames, got {videos.shape[1]}")
    return videos


def _cnn_layers(cfg: CNNConfig):
    rng = np.random.default_rng(cfg.seed)
    layers = []
    in_ch = cfg.channels
    for w, k, p in zip(cfg.widths, cfg.kernels, cfg.pools):
        layers += [Conv2D(in_ch, w, k, padding=k // 2, rng=rng), ReLU(), MaxPool2D(p)]
        in_ch = w
    layers.append(Flatten())
    return layers, rng


def _head_layers(m, widths, rng):
    layers = []
    for w in widths:
        layers.append(Dense(m, w, "relu", rng=rng))
        m = w
    layers.append(Dense(m, 1, "sigmoid", rng=rng))
    return layers


def _frame_classifier(cell, cfg, head_widths):
    m = feature_length(cfg)
    layers, rng = _cnn_layers(cfg)
    boundary = len(layers) - 1
    layers += _head_layers(m, head_widths, rng)
    return FrameClassifier(cell, cfg, Sequential(layers), boundary)


def build_auto(cfg: CNNConfig = CNNConfig()) -> FrameClassifier:
    return _frame_classifier(CELLS["auto"], cfg, cfg.head)


def truncate_to_extractor(model: FrameClassifier) -> FeatureExtractor:
    """Layers up to and including the last pooling layer (plus flatten).

    The extractor shares parameter storage with ``model``.
    """
    layers = model.network.layers
    pools = [i for i, layer in enumerate(layers) if isinstance(layer, MaxPool2D)]
    if not pools:
        raise StructureError(f"{model.cell.name} has no pooling layer to truncate at")
    last = pools[-1]
    net = Sequential(layers[:last + 1] + [Flatten()], model.network.names[:last + 1] + [f"{last + 1}.flatten"])
    m = int(np.prod(net.output_shape(model.input_shape)))
    return FeatureExtractor(net, m, model.input_shape)


@dataclass(frozen=True)
class PretrainConfig:
    """Phase-1 (warp detection) training settings for Warp."""

    epochs: int = 30
    patience: int = 8
    learning_rate: float = 3e-3
    batch_size: int = 32
    holdout_fraction: float = 0.25
    min_accuracy: float = 0.75
    seed: int = 0


def build_warp(cfg: CNNConfig, warp_pretrain_data, pretrain: PretrainConfig = PretrainConfig()) -> FrameClassifier:
    """Two-phase Warp construction.

    Phase 1 trains the CNN stack with a single sigmoid node to separate
    warped from pristine frames. Phase 2 freezes everything up to the last
    pooling layer and attaches a fresh ``cfg.head`` + sigmoid head, which is
    the only part later trained on the detection dataset.
    """
    from . import training

    frames, labels = warp_pretrain_data
    frames = np.asarray(frames, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(set(labels.tolist())) < 2:
        raise PretrainError("warp pretraining data needs both warped and pristine frames")
    phase1 = _frame_classifier(CELLS["warp"], cfg, ())
    rng = np.random.default_rng([pretrain.seed, 3])
    order = rng.permutation(len(labels))
    n_hold = max(2, int(round(pretrain.holdout_fraction * len(labels))))
    hold, fit = order[:n_hold], order[n_hold:]

    def accuracy():
        probs = phase1.predict_frames(frames[hold])
        return float(np.mean((probs >= 0.5) == (labels[hold] == 1)))

    tcfg = training.TrainConfig(max_epochs=pretrain.epochs, patience=pretrain.patience,
                                learning_rate=pretrain.learning_rate, batch_size=pretrain.batch_size,
                                seed=pretrain.seed, class_weights=(1.0, 1.0))
    log = training.fit_arrays(phase1.network, frames[fit], labels[fit], accuracy, tcfg)
    acc = accuracy()
    if acc < pretrain.min_accuracy:
        raise PretrainError(
            f"warp pretraining reached held-out accuracy {acc:.3f} < {pretrain.min_accuracy}; "
            "manual feature unusable")

    m = feature_length(cfg)
    extractor_layers = phase1.network.layers[:phase1.boundary + 1]
    names = phase1.network.names[:phase1.boundary + 1]
    head_rng = np.random.default_rng([cfg.seed, 5])
    head = _head_layers(m, cfg.head, head_rng)
    names = names + [f"{len(names) + i}.{layer.name}" for i, layer in enumerate(head)]
    model = FrameClassifier(CELLS["warp"], cfg, Sequential(extractor_layers + head, names), phase1.boundary)
    model.extractor_network().freeze(True)
    model.pretrain_accuracy = acc
    model.pretrain_log = log
    return model


def build_sequence_model(extractor: FeatureExtractor, cfg: SequenceConfig = SequenceConfig(),
                         cell: FrameworkCell | str = "tauto") -> SequenceClassifier:
    """LSTM head over a frozen copy of ``extractor``.

    The head starts with a frozen per-feature standardisation whose
    statistics are fitted on the training features before the LSTM trains.
    """
    if isinstance(cell, str):
        cell = FrameworkCell.from_name(cell)
    if not cell.dependent:
        raise ParameterError(f"{cell.name} is not a temporally dependent cell")
    if cfg.hidden <= 0:
        raise ParameterError("hidden size must be positive")
    net = extractor.network.clone().freeze(True)
    frozen = FeatureExtractor(net, extractor.feature_length, extractor.input_shape)
    rng = np.random.default_rng([cfg.seed, 17])
    head = Sequential([
        Standardize(extractor.feature_length),
        LSTM(extractor.feature_length, cfg.hidden, rng=rng),
        Dropout(cfg.dropout, rng=np.random.default_rng([cfg.seed, 19])),
        Dense(cfg.hidden, cfg.dense, "relu", rng=rng),
        Dense(cfg.dense, 1, "sigmoid", rng=rng),
    ])
    return SequenceClassifier(cell, frozen, head, cfg)


def predict_video(model, frames) -> float:
    """Deepfake probability for one 40-frame clip (40, C, H, W) or SequenceSample."""
    frames = getattr(frames, "frames", frames)
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 4 or frames.shape[0] != WINDOW:
        raise InputError(f"expected exactly {WINDOW} frames, got shape {frames.shape}")
    return float(model.predict_videos(frames[None])[0])


def sequence_extractor_source(cell: FrameworkCell) -> str:
    """Name of the independent cell whose trained extractor a dependent cell reuses."""
    return "auto" if cell.feature_extraction == "automatic" else "warp"


def build_skeleton(cell: FrameworkCell | str, cnn: CNNConfig, seq: SequenceConfig | None = None):
    """Untrained model with the architecture and frozen flags of a trained
    ``cell``; used to receive checkpoint weights."""
    if isinstance(cell, str):
        cell = FrameworkCell.from_name(cell)
    base = sequence_extractor_source(cell)
    model = _frame_classifier(CELLS[base], cnn, cnn.head)
    if base == "warp":
        model.extractor_network().freeze(True)
    if not cell.dependent:
        return model
    return build_sequence_model(truncate_to_extractor(model), seq or SequenceConfig(), cell)


def save_model(model, path):
    checkpoint.save(path, model.parameters())


def load_model(path, cell, cnn: CNNConfig, seq: SequenceConfig | None = None):
    model = build_skeleton(cell, cnn, seq)
    checkpoint.apply(model.parameters(), checkpoint.load(path))
    return model
