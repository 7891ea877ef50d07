"""Preprocessing: tracked 40-frame windows, 1.3x face crops, [0, 1] normalisation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import frame_io, synthetic
from .errors import InputError
from .imaging import bilinear_resample

WINDOW = 40
CROP_SCALE = 1.3


@dataclass
class SequenceSample:
    frames: np.ndarray   # (40, C, S, S)
    label: int
    tag: str
    video_id: str
    start: int = 0

    def __post_init__(self):
        if len(self.frames) != WINDOW:
            raise InputError(f"a sequence sample needs exactly {WINDOW} frames, got {len(self.frames)}")


def extract_windows(stream, window: int = WINDOW) -> list[range]:
    """First ``window``-frame range of each maximal detection run long enough.

    ``stream`` is a sequence of per-frame boxes where ``None`` or a NaN row
    marks a frame without a detection.
    """
    present = [b is not None and not np.any(np.isnan(np.asarray(b, dtype=float))) for b in stream]
    windows = []
    run_start = None
    for i, ok in enumerate(present + [False]):
        if ok and run_start is None:
            run_start = i
        elif not ok and run_start is not None:
            if i - run_start >= window:
                windows.append(range(run_start, run_start + window))
            run_start = None
    return windows


def crop_region(bbox, frame_shape, scale: float = CROP_SCALE):
    """Continuous crop bounds (x0, y0, x1, y1): the box scaled about its centre,
    intersected with the frame."""
    h, w = frame_shape
    cx, cy, bw, bh = (float(v) for v in bbox)
    if not (bw > 0 and bh > 0):
        raise InputError(f"degenerate bounding box {tuple(bbox)}")
    if scale <= 0:
        raise InputError("crop scale must be positive")
    tol = 1e-6
    if cx - bw / 2 < -tol or cy - bh / 2 < -tol or cx + bw / 2 > w + tol or cy + bh / 2 > h + tol:
        raise InputError(f"bounding box {tuple(bbox)} exceeds frame {w}x{h}")
    half_w, half_h = scale * bw / 2, scale * bh / 2
    return (max(cx - half_w, 0.0), max(cy - half_h, 0.0), min(cx + half_w, float(w)), min(cy + half_h, float(h)))


def crop_face(frame, bbox, out_size, scale: float = CROP_SCALE):
    frame = np.asarray(frame, dtype=np.float64)
    x0, y0, x1, y1 = crop_region(bbox, frame.shape[1:], scale)
    return bilinear_resample(frame, x0, y0, x1, y1, out_size, out_size)


def normalize(frame):
    frame = np.asarray(frame, dtype=np.float64)
    if frame.size and frame.min() < 0:
        raise InputError("negative pixel values")
    if frame.size and frame.max() > 1.0:
        frame = frame / 255.0
    return np.clip(frame, 0.0, 1.0)


def preprocess_video(frames, boxes, out_size, label, tag, video_id, scale=CROP_SCALE):
    """Returns a SequenceSample, or None if no 40-frame detection run exists."""
    windows = extract_windows(boxes)
    if not windows:
        return None
    win = windows[0]
    crops = np.stack([crop_face(normalize(frames[t]), boxes[t], out_size, scale) for t in win])
    return SequenceSample(crops, label, tag, video_id, win.start)


INDEX_FIELDS = ("sample_id", "path", "tag", "label", "split", "identity_seed", "start")


def preprocess_dataset(dataset_dir, out_dir, out_size, scale=CROP_SCALE):
    """Crop every video of a dataset directory to ``out_size`` and write an index.

    Videos without a 40-frame detection run are skipped and listed in
    ``excluded.txt``.
    """
    dataset_dir, out = Path(dataset_dir), Path(out_dir)
    rows, excluded = [], []
    for rec in synthetic.read_manifest(dataset_dir):
        frames = frame_io.read_frames(dataset_dir / rec["path"])
        boxes = synthetic.load_detections(dataset_dir / rec["detections"], len(frames))
        sample = preprocess_video(frames, boxes, out_size, rec["label"], rec["tag"], rec["sample_id"], scale)
        if sample is None:
            excluded.append(rec["sample_id"])
            continue
        rel = f"samples/{rec['sample_id']}.bin"
        frame_io.write_frames(out / rel, sample.frames)
        rows.append((rec["sample_id"], rel, rec["tag"], rec["label"], rec["split"], rec["identity_seed"], sample.start))
    frame_io.write_csv(out / "index.csv", INDEX_FIELDS, rows)
    frame_io.atomic_write_text(out / "excluded.txt", "".join(f"{s}\n" for s in excluded))
    frame_io.atomic_write_text(out / "preprocess.json",
                               json.dumps({"size": out_size, "scale": scale}, indent=2) + "\n")
    return out


@dataclass
class SplitArrays:
    frames: np.ndarray      # (N, 40, C, S, S)
    labels: np.ndarray      # (N,)
    tags: list
    ids: list

    def __len__(self):
        return len(self.labels)


def load_preprocessed(pre_dir) -> dict[str, SplitArrays]:
    pre_dir = Path(pre_dir)
    grouped = {s: ([], [], [], []) for s in synthetic.SPLITS}
    for r in frame_io.read_csv(pre_dir / "index.csv"):
        f, l, t, i = grouped[r["split"]]
        f.append(frame_io.read_frames(pre_dir / r["path"]))
        l.append(int(r["label"]))
        t.append(r["tag"])
        i.append(r["sample_id"])
    out = {}
    for split, (f, l, t, i) in grouped.items():
        frames = np.stack(f) if f else np.empty((0, WINDOW, 1, 1, 1))
        out[split] = SplitArrays(frames, np.asarray(l, dtype=np.int64), t, i)
    return out


def warp_pretrain_frames(n_identities, seed, frame_size, out_size, channels=1, length=48,
                         strength_range=(0.6, 1.0), scale=CROP_SCALE):
    """Cropped single frames labelled warped (1) / pristine (0).

    Each identity contributes one pristine and one warped frame taken at
    independent random times; warp strength is drawn from ``strength_range``.
    """
    rng = np.random.default_rng([seed, 11])
    xs, ys = [], []
    for i in range(n_identities):
        identity = 2 ** 40 + seed * 1_000_000 + i  # disjoint from dataset identities
        video = synthetic.generate_real_sequence(identity, length, frame_size, channels)
        t_real, t_warp = rng.integers(0, length, 2)
        strength = rng.uniform(*strength_range)
        warped = synthetic.warp_frame(video.frames[t_warp], video.boxes[t_warp], strength)
        xs.append(crop_face(video.frames[t_real], video.boxes[t_real], out_size, scale))
        ys.append(0)
        xs.append(crop_face(warped, video.boxes[t_warp], out_size, scale))
        ys.append(1)
    return np.stack(xs), np.asarray(ys, dtype=np.int64)
