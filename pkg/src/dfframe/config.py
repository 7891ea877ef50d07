"""Experiment configuration: strict JSON with defaults, validated into dataclasses.

Schema (every key optional; unknown keys are rejected)::

    {
      "seed": 0,
      "output_dir": null,
      "dataset":    {"counts": {"original": 100, ...}, "splits": [0.4, 0.2, 0.4],
                     "length": 48, "size": 32, "channels": 1,
                     "spatial_strength": 1.0, "temporal_amplitude": 1.0, "gap_fraction": 0.0},
      "preprocess": {"size": 16, "scale": 1.3},
      "models":     {"auto": CNN, "warp": CNN, "tauto": SEQUENCE, "twarp": SEQUENCE},
      "warp_pretrain": {"identities": 300, "strength_range": [0.6, 1.0], "epochs": 30, ...},
      "train":      {"auto": TRAIN, "tauto": TRAIN, "warp": TRAIN, "twarp": TRAIN},
      "analytics":  {"profiles": [{"name": "A", "n": 10, "k": 4}, ...],
                     "k_values": [1, 2, 4, 8, 16], "n_max": 100}
    }

CNN keys are those of ``CNNConfig``, SEQUENCE those of ``SequenceConfig``,
TRAIN those of ``TrainConfig``; the warp pretraining section also accepts
``PretrainConfig`` keys. Per-section ``seed`` values default to the
top-level seed.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, DFFrameError
from .models import CNNConfig, PretrainConfig, SequenceConfig
from .synthetic import TAGS
from .training import TrainConfig

CELL_NAMES = ("auto", "tauto", "warp", "twarp")

DEFAULTS = {
    "seed": 0,
    "output_dir": None,
    "dataset": {
        "counts": {"original": 100, "spatial_fake": 100, "temporal_fake": 100, "combined_fake": 100},
        "splits": [0.4, 0.2, 0.4],
        "length": 48,
        "size": 32,
        "channels": 1,
        "spatial_strength": 1.0,
        "temporal_amplitude": 1.0,
        "gap_fraction": 0.0,
    },
    "preprocess": {"size": 16, "scale": 1.3},
    "models": {
        "auto": {"input_size": 16, "channels": 1, "widths": [8, 8, 16, 16], "kernels": [3, 3, 3, 3],
                 "pools": [2, 2, 2, 2], "head": []},
        "warp": {"input_size": 16, "channels": 1, "widths": [8, 8, 16, 16], "kernels": [3, 3, 3, 3],
                 "pools": [2, 2, 2, 2], "head": []},
        "tauto": {"hidden": 16, "dense": 16, "dropout": 0.5},
        "twarp": {"hidden": 16, "dense": 16, "dropout": 0.5},
    },
    "warp_pretrain": {"identities": 300, "strength_range": [0.6, 1.0], "epochs": 30, "patience": 8,
                      "learning_rate": 3e-3, "batch_size": 32, "holdout_fraction": 0.25, "min_accuracy": 0.75},
    "train": {
        "auto": {"max_epochs": 100, "patience": 10, "learning_rate": 3e-3, "batch_size": 32,
                 "frames_per_video": 8},
        "warp": {"max_epochs": 100, "patience": 10, "learning_rate": 3e-3, "batch_size": 32,
                 "frames_per_video": 8},
        "tauto": {"max_epochs": 100, "patience": 10, "learning_rate": 1e-2, "batch_size": 16},
        "twarp": {"max_epochs": 100, "patience": 10, "learning_rate": 1e-2, "batch_size": 16},
    },
    "analytics": {
        "profiles": [{"name": "majority", "n": 10, "k": 4}, {"name": "minority", "n": 10, "k": 2}],
        "k_values": [1, 2, 4, 8, 16],
        "n_max": 100,
    },
}

# keys whose values are free-form mappings rather than nested schema
_OPEN_MAPPINGS = {("dataset", "counts")}


def _merge(base, override, path=()):
    """Recursive merge that rejects keys absent from ``base``."""
    if not isinstance(override, dict):
        raise ConfigError(f"{'.'.join(path) or 'config'} must be an object")
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = path + (key,)
        if key not in base:
            raise ConfigError(f"unknown config key {'.'.join(where)!r}")
        if where in _OPEN_MAPPINGS:
            if not isinstance(value, dict):
                raise ConfigError(f"{'.'.join(where)} must be an object")
            out[key] = copy.deepcopy(value)
        elif isinstance(base[key], dict):
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict      # fully resolved JSON document

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def dataset(self) -> dict:
        return self.raw["dataset"]

    @property
    def tags(self) -> list:
        return [t for t in TAGS if t in self.dataset["counts"]]

    @property
    def preprocess_size(self) -> int:
        return self.raw["preprocess"]["size"]

    @property
    def crop_scale(self) -> float:
        return self.raw["preprocess"]["scale"]

    def cnn(self, cell: str) -> CNNConfig:
        base = "auto" if cell in ("auto", "tauto") else "warp"
        return self._build(CNNConfig, ("models", base))

    def sequence(self, cell: str) -> SequenceConfig:
        return self._build(SequenceConfig, ("models", cell))

    def train(self, cell: str) -> TrainConfig:
        return self._build(TrainConfig, ("train", cell))

    def pretrain(self) -> PretrainConfig:
        section = {k: v for k, v in self.raw["warp_pretrain"].items() if k not in ("identities", "strength_range")}
        return self._make(PretrainConfig, section, "warp_pretrain")

    def _build(self, cls, path):
        section = self.raw
        for key in path:
            section = section[key]
        return self._make(cls, section, ".".join(path))

    def _make(self, cls, section, where):
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(section) - fields
        if unknown:
            raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
        kwargs = dict(section)
        kwargs.setdefault("seed", self.seed)
        try:
            return cls(**kwargs)
        except (DFFrameError, TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True) + "\n"

    @property
    def hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def validate(self):
        """Build every section once so errors surface before any stage runs."""
        ds = self.dataset
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        unknown = set(ds["counts"]) - set(TAGS)
        if unknown:
            raise ConfigError(f"dataset.counts has unknown tags {sorted(unknown)}; expected {list(TAGS)}")
        if "original" not in ds["counts"] or len(ds["counts"]) < 2:
            raise ConfigError("dataset.counts needs 'original' and at least one fake tag")
        if any(not isinstance(v, int) or v < 1 for v in ds["counts"].values()):
            raise ConfigError("dataset counts must be positive integers")
        splits = ds["splits"]
        if (not isinstance(splits, list) or len(splits) != 3 or any(not isinstance(s, (int, float)) for s in splits)
                or any(s < 0 for s in splits) or abs(sum(splits) - 1.0) > 1e-9):
            raise ConfigError(f"dataset.splits must be three non-negative fractions summing to 1, got {splits}")
        if ds["length"] < 40:
            raise ConfigError("dataset.length must be at least 40 frames")
        for cell in CELL_NAMES:
            self.train(cell)
            if cell in ("tauto", "twarp"):
                self.sequence(cell)
            cnn = self.cnn(cell)
            if cnn.input_size != self.preprocess_size:
                raise ConfigError(f"models.{cell}: input_size {cnn.input_size} != preprocess.size "
                                  f"{self.preprocess_size}")
            if cnn.channels != ds["channels"]:
                raise ConfigError(f"models.{cell}: channels {cnn.channels} != dataset.channels {ds['channels']}")
        self.pretrain()
        lo, hi = self.raw["warp_pretrain"]["strength_range"]
        if not 0 < lo <= hi <= 1:
            raise ConfigError("warp_pretrain.strength_range must satisfy 0 < low <= high <= 1")
        return self


def from_dict(doc: dict, seed: int | None = None) -> ExperimentConfig:
    raw = _merge(DEFAULTS, doc)
    if seed is not None:
        raw["seed"] = seed
    return ExperimentConfig(raw).validate()


def load(path=None, seed: int | None = None) -> ExperimentConfig:
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return from_dict(doc, seed)
