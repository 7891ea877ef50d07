"""Stage runner behind the CLI: one run directory per experiment config.

Layout::

    <run>/config.json           resolved ExperimentConfig
    <run>/manifest.json         RunManifest (config hash, stage timestamps, artifact checksums)
    <run>/dataset/              synthetic videos
    <run>/preprocessed/         40-frame face crops
    <run>/models/<cell>.ckpt    one checkpoint and one <cell>.log.jsonl per trained cell
    <run>/eval/                 predictions and metric tables
    <run>/analytics/            balance report and production curve
"""

from __future__ import annotations

import hashlib
import json
import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import analytics, evaluation, frame_io, models, pipeline, synthetic, training
from .config import ExperimentConfig
from .errors import ConfigError, DataError, StageError

ENV_OUT = "DFFRAME_OUT"
DISPLAY = {"auto": "Auto", "tauto": "TAuto", "warp": "Warp", "twarp": "TWarp"}
PAIRS = (("Auto", "TAuto"), ("Warp", "TWarp"))
MODEL_ORDER = ("Auto", "TAuto", "Warp", "TWarp")


def default_run_dir(config: ExperimentConfig) -> Path:
    if config.raw.get("output_dir"):
        return Path(config.raw["output_dir"])
    root = Path(os.environ.get(ENV_OUT, "runs"))
    return root / f"run-{config.hash[:12]}"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class RunManifest:
    def __init__(self, path: Path, config_hash: str):
        self.path = path
        if path.exists():
            self.data = json.loads(path.read_text())
            if self.data.get("config_hash") != config_hash:
                raise ConfigError(f"{path.parent} belongs to a different config "
                                  f"({self.data.get('config_hash', '?')[:12]} != {config_hash[:12]})")
        else:
            self.data = {"config_hash": config_hash, "stages": {}}

    def record(self, stage: str, started: str, root: Path, artifacts, extra=None):
        entry = {"started": started, "finished": _now(),
                 "artifacts": {str(Path(a).relative_to(root)): sha256_file(a) for a in sorted(artifacts)}}
        if extra:
            entry.update(extra)
        self.data["stages"][stage] = entry
        frame_io.atomic_write_text(self.path, json.dumps(self.data, indent=2, sort_keys=True) + "\n")

    def stage(self, name):
        return self.data["stages"].get(name)


class Run:
    def __init__(self, config: ExperimentConfig, run_dir=None):
        self.config = config
        self.root = Path(run_dir) if run_dir is not None else default_run_dir(config)
        self.root.mkdir(parents=True, exist_ok=True)
        cfg_path = self.root / "config.json"
        if cfg_path.exists() and cfg_path.read_text() != config.to_json():
            raise ConfigError(f"{self.root} already holds a run with a different config")
        frame_io.atomic_write_text(cfg_path, config.to_json())
        self.manifest = RunManifest(self.root / "manifest.json", config.hash)

    # paths
    @property
    def dataset_dir(self):
        return self.root / "dataset"

    @property
    def pre_dir(self):
        return self.root / "preprocessed"

    @property
    def models_dir(self):
        return self.root / "models"

    @property
    def eval_dir(self):
        return self.root / "eval"

    @property
    def analytics_dir(self):
        return self.root / "analytics"

    def checkpoint_path(self, cell):
        return self.models_dir / f"{cell}.ckpt"

    def log_path(self, cell):
        return self.models_dir / f"{cell}.log.jsonl"

    # stages
    def generate(self) -> Path:
        started = _now()
        ds = self.config.dataset
        synthetic.generate_dataset(self.dataset_dir, ds["counts"], tuple(ds["splits"]), self.config.seed,
                                   length=ds["length"], size=ds["size"], channels=ds["channels"],
                                   spatial_strength=ds["spatial_strength"],
                                   temporal_amplitude=ds["temporal_amplitude"], gap_fraction=ds["gap_fraction"])
        self.manifest.record("generate", started, self.root,
                             [self.dataset_dir / "manifest.csv", self.dataset_dir / "dataset.json"])
        return self.dataset_dir

    def preprocess(self) -> Path:
        if not (self.dataset_dir / "manifest.csv").exists():
            raise StageError(f"no dataset in {self.dataset_dir}; run 'generate' first")
        started = _now()
        pipeline.preprocess_dataset(self.dataset_dir, self.pre_dir, self.config.preprocess_size,
                                    self.config.crop_scale)
        excluded = (self.pre_dir / "excluded.txt").read_text().split()
        self.manifest.record("preprocess", started, self.root,
                             [self.pre_dir / "index.csv", self.pre_dir / "excluded.txt"],
                             {"excluded": len(excluded)})
        return self.pre_dir

    def load_data(self):
        if not (self.pre_dir / "index.csv").exists():
            raise StageError(f"no preprocessed data in {self.pre_dir}; run 'preprocess' first")
        return pipeline.load_preprocessed(self.pre_dir)

    def load_model(self, cell):
        path = self.checkpoint_path(cell)
        if not path.exists():
            raise StageError(f"missing {DISPLAY[cell]} checkpoint {path}; run 'train --cell {cell}' first")
        seq = self.config.sequence(cell) if cell in ("tauto", "twarp") else None
        return models.load_model(path, cell, self.config.cnn(cell), seq)

    def build(self, cell):
        """Fresh model for ``cell``; dependent cells reuse the trained
        independent model's extractor."""
        cfg = self.config
        if cell == "auto":
            return models.build_auto(cfg.cnn(cell))
        if cell == "warp":
            wp = cfg.raw["warp_pretrain"]
            ds = cfg.dataset
            data = pipeline.warp_pretrain_frames(wp["identities"], cfg.seed, ds["size"], cfg.preprocess_size,
                                                 ds["channels"], ds["length"], tuple(wp["strength_range"]),
                                                 cfg.crop_scale)
            return models.build_warp(cfg.cnn(cell), data, cfg.pretrain())
        source = models.sequence_extractor_source(models.FrameworkCell.from_name(cell))
        if not self.checkpoint_path(source).exists():
            raise StageError(f"{DISPLAY[cell]} reuses the {DISPLAY[source]} feature extractor; "
                             f"train '{source}' first")
        base = self.load_model(source)
        return models.build_sequence_model(models.truncate_to_extractor(base), cfg.sequence(cell), cell)

    def train(self, cell) -> training.TrainLog:
        if cell not in DISPLAY:
            raise ConfigError(f"unknown cell {cell!r}; expected one of {list(DISPLAY)}")
        data = self.load_data()
        started = _now()
        model = self.build(cell)
        log = training.train(model, data, self.config.train(cell))
        self.models_dir.mkdir(parents=True, exist_ok=True)
        models.save_model(model, self.checkpoint_path(cell))
        frame_io.atomic_write_text(self.log_path(cell), log.to_jsonl())
        extra = {"best_val_accuracy": log.best_val_accuracy, "stopped_epoch": log.stopped_epoch,
                 "stop_reason": log.stop_reason}
        if getattr(model, "pretrain_accuracy", None) is not None:
            extra["pretrain_accuracy"] = model.pretrain_accuracy
        self.manifest.record(f"train.{cell}", started, self.root,
                             [self.checkpoint_path(cell), self.log_path(cell)], extra)
        return log

    def predictions(self, cell, split="test") -> list:
        data = self.load_data()[split]
        if len(data) == 0:
            raise DataError(f"empty {split} split")
        scores = self.load_model(cell).predict_videos(data.frames)
        return [evaluation.Prediction(vid, tag, float(np.clip(s, 0.0, 1.0)), int(y))
                for vid, tag, s, y in zip(data.ids, data.tags, scores, data.labels)]

    def evaluate(self) -> evaluation.EvalReport:
        missing = [c for c in DISPLAY if not self.checkpoint_path(c).exists()]
        if missing:
            raise StageError(f"evaluation needs all four checkpoints; missing {missing}")
        started = _now()
        preds = {}
        pred_dir = self.eval_dir / "predictions"
        for cell, name in DISPLAY.items():
            preds[name] = self.predictions(cell)
            evaluation.write_predictions(pred_dir / f"{cell}.tsv", preds[name])
        subsets = evaluation.order_subsets({p.subset for p in preds["Auto"]})
        report = evaluation.evaluate(preds, PAIRS, subsets)
        evaluation.write_report_files(report, self.eval_dir, MODEL_ORDER)
        self.manifest.record("evaluate", started, self.root, sorted(p for p in self.eval_dir.rglob("*")
                                                                     if p.is_file()))
        return report

    def analytics(self, profiles=None, check_enumeration=False):
        started = _now()
        section = self.config.raw["analytics"]
        if profiles is None:
            try:
                profiles = [analytics.SubgroupProfile(p["name"], p["n"], p["k"]) for p in section["profiles"]]
            except (KeyError, TypeError) as exc:
                raise ConfigError(f"analytics.profiles entries need name, n and k ({exc})") from None
        rows = analytics.balance_report(profiles)
        table = analytics.production_curve(section["k_values"], range(1, section["n_max"] + 1))
        if check_enumeration:
            for p in profiles:
                brute = analytics.enumerate_pairs(p.n, p.k)
                if brute != p.deepfakes:
                    raise ArithmeticError(f"{p.name}: closed form {p.deepfakes} != enumeration {brute}")
        analytics.write_balance(rows, self.analytics_dir)
        analytics.write_production_curve(table, self.analytics_dir)
        self.manifest.record("analytics", started, self.root,
                             [p for p in self.analytics_dir.iterdir() if p.is_file()])
        return rows, table

    def report(self) -> str:
        lines = [f"Run {self.root}", f"config hash {self.config.hash[:12]}", "", "Training"]
        for cell, name in DISPLAY.items():
            stage = self.manifest.stage(f"train.{cell}")
            if stage is None:
                lines.append(f"  {name:<6} not trained")
            else:
                lines.append(f"  {name:<6} best val acc {stage['best_val_accuracy']:.3f}, stopped at epoch "
                             f"{stage['stopped_epoch']} ({stage['stop_reason']})")
        for path in (self.eval_dir / "report.txt", self.analytics_dir / "balance.txt"):
            if path.exists():
                lines += ["", path.read_text().rstrip("\n")]
        text = "\n".join(lines) + "\n"
        frame_io.atomic_write_text(self.root / "report.txt", text)
        return text
