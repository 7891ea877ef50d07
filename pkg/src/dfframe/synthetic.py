"""Synthetic labelled face-video generator.

Real videos show a smooth blob-textured "face" drifting slowly over a static
background. Inside the face region the brightness follows one sine period
per 40 frames with a random phase, so any 40-frame window of a real video
contains the same multiset of brightness offsets.

Two artifact families stand in for the deepfake generation methods:

* spatial: the central face region of every frame is block-resampled and
  smoothed, removing fine texture (a face-warping analog visible in any
  single frame);
* temporal: the brightness phase of alternate frames is advanced by
  ``amplitude * pi``. Because the phase is uniform, every frame keeps the
  marginal distribution of a real frame; only frame-to-frame differences
  carry the signal.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import frame_io
from .errors import ParameterError
from .imaging import box_blur3

TAGS = ("original", "spatial_fake", "temporal_fake", "combined_fake")
FAKE_TAGS = TAGS[1:]
WINDOW = 40
BRIGHTNESS_AMPLITUDE = 0.12
MIN_LENGTH = 40


@dataclass(frozen=True)
class ArtifactSpec:
    spatial_warp_strength: float = 0.0
    temporal_flicker_amplitude: float = 0.0
    method_tag: str = "original"

    def __post_init__(self):
        s, a, tag = self.spatial_warp_strength, self.temporal_flicker_amplitude, self.method_tag
        if tag not in TAGS:
            raise ParameterError(f"unknown method tag {tag!r}")
        if not (0.0 <= s <= 1.0 and 0.0 <= a <= 1.0):
            raise ParameterError("artifact strengths must lie in [0, 1]")
        expected = {
            "original": (False, False),
            "spatial_fake": (True, False),
            "temporal_fake": (False, True),
            "combined_fake": (True, True),
        }[tag]
        if (s > 0, a > 0) != expected:
            raise ParameterError(f"strengths (spatial={s}, temporal={a}) inconsistent with tag {tag!r}")


@dataclass
class VideoSample:
    frames: np.ndarray          # (L, C, H, W) in [0, 1]
    boxes: np.ndarray           # (L, 4) cx, cy, w, h; NaN rows = no detection
    identity_seed: int
    spec: ArtifactSpec
    face_mask: np.ndarray       # (L, H, W) soft face mask
    brightness: np.ndarray      # (L,) offset added inside the face mask
    phase: float

    @property
    def label(self) -> int:
        return int(self.spec.method_tag != "original")

    @property
    def tag(self) -> str:
        return self.spec.method_tag

    def __len__(self):
        return len(self.frames)


def _cosine_texture(rng, count, amp_total, wl_range, xx, yy):
    out = np.zeros(np.broadcast(xx, yy).shape)
    for _ in range(count):
        theta = rng.uniform(0, np.pi)
        wl = rng.uniform(*wl_range)
        ph = rng.uniform(0, 2 * np.pi)
        k = 2 * np.pi / wl
        out += np.cos(k * (np.cos(theta) * xx + np.sin(theta) * yy) + ph)
    return out * (amp_total / count)


def _blob(xx, yy, cx, cy, sigma):
    return np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma ** 2))


def brightness_schedule(length, phase, amplitude=0.0):
    t = np.arange(length)
    return BRIGHTNESS_AMPLITUDE * np.sin(phase + 2 * np.pi * t / WINDOW + amplitude * np.pi * (t % 2))


def generate_real_sequence(identity_seed, length=48, size=32, channels=1) -> VideoSample:
    """Render a pristine video for one synthetic identity; deterministic in the seed."""
    if length < MIN_LENGTH:
        raise ParameterError(f"length must be >= {MIN_LENGTH}, got {length}")
    if size < 16:
        raise ParameterError(f"frame size must be >= 16, got {size}")
    rng = np.random.default_rng(identity_seed)
    yy, xx = np.mgrid[0:size, 0:size] + 0.5

    rx = size * rng.uniform(0.19, 0.22)
    ry = rx * rng.uniform(1.1, 1.25)
    c0 = size / 2 + rng.uniform(-1.5, 1.5, 2)
    vel = rng.uniform(-1, 1, 2) * 2.5 / length

    skin = rng.uniform(0.45, 0.55)
    eyes = [(sx * 0.4, -0.25, rng.uniform(0.10, 0.15)) for sx in (-1, 1)]
    mouth = (0.0, 0.45, rng.uniform(0.10, 0.15))
    extras = [(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.03, 0.03),
               rng.uniform(0.2, 0.4)) for _ in range(3)]
    tex_params = rng.integers(0, 2 ** 31)

    bg_level = rng.uniform(0.3, 0.5)
    gx, gy = rng.uniform(-0.05, 0.05, 2)
    background = bg_level + gx * (xx / size - 0.5) * 2 + gy * (yy / size - 0.5) * 2
    background = background + _cosine_texture(rng, 3, 0.02, (2.0, 4.0), xx, yy)

    gains = np.ones(channels) if channels == 1 else rng.uniform(0.9, 1.0, channels)
    phase = float(rng.uniform(0, 2 * np.pi))

    frames = np.empty((length, channels, size, size))
    masks = np.empty((length, size, size))
    boxes = np.empty((length, 4))
    for t in range(length):
        cx, cy = c0 + vel * t
        u = (xx - cx) / rx
        v = (yy - cy) / ry
        r = np.sqrt(u ** 2 + v ** 2)
        mask = 1.0 / (1.0 + np.exp(-(1.0 - r) * 8.0))
        face = np.full_like(xx, skin)
        for ex, ey, amp in eyes + [mouth]:
            face -= amp * _blob(u, v, ex, ey, 0.15)
        for ex, ey, amp, sig in extras:
            face += amp * _blob(u, v, ex, ey, sig)
        # texture is attached to the face so it drifts with it
        face += _cosine_texture(np.random.default_rng(tex_params), 4, 0.06, (2.2, 3.2), xx - cx, yy - cy)
        base = background * (1 - mask) + face * mask
        frames[t] = gains[:, None, None] * base
        masks[t] = mask
        boxes[t] = (cx, cy, 2 * rx, 2 * ry)

    brightness = brightness_schedule(length, phase)
    frames += brightness[:, None, None, None] * masks[:, None]
    np.clip(frames, 0.0, 1.0, out=frames)
    return VideoSample(frames, boxes, int(identity_seed), ArtifactSpec(), masks, brightness, phase)


def _combined_tag(spatial, temporal):
    if spatial > 0 and temporal > 0:
        return "combined_fake"
    if spatial > 0:
        return "spatial_fake"
    if temporal > 0:
        return "temporal_fake"
    return "original"


def spatial_region(box, shape):
    """Integer pixel bounds (y0, y1, x0, x1) of the central face region."""
    h, w = shape
    cx, cy, bw, bh = box
    x0 = int(np.clip(np.floor(cx - 0.3 * bw), 0, w))
    x1 = int(np.clip(np.ceil(cx + 0.3 * bw), 0, w))
    y0 = int(np.clip(np.floor(cy - 0.3 * bh), 0, h))
    y1 = int(np.clip(np.ceil(cy + 0.3 * bh), 0, h))
    return y0, y1, x0, x1


def warp_frame(frame, box, strength, block=2):
    """Block-resample and smooth the central face region of one (C, H, W) frame."""
    if strength == 0:
        return frame.copy()
    out = frame.copy()
    y0, y1, x0, x1 = spatial_region(box, frame.shape[1:])
    region = frame[:, y0:y1, x0:x1]
    c, rh, rw = region.shape
    ph, pw = -rh % block, -rw % block
    padded = np.pad(region, ((0, 0), (0, ph), (0, pw)), mode="edge")
    coarse = padded.reshape(c, padded.shape[1] // block, block, padded.shape[2] // block, block).mean(axis=(2, 4))
    blocky = np.repeat(np.repeat(coarse, block, axis=1), block, axis=2)[:, :rh, :rw]
    processed = box_blur3(blocky)
    out[:, y0:y1, x0:x1] = (1 - strength) * region + strength * processed
    return out


def apply_spatial_artifact(sample: VideoSample, strength: float) -> VideoSample:
    if strength <= 0:
        raise ParameterError("spatial artifact strength must be > 0 (use the original sample)")
    if strength > 1:
        raise ParameterError("spatial artifact strength must be <= 1")
    frames = np.empty_like(sample.frames)
    for t in range(len(sample)):
        frames[t] = warp_frame(sample.frames[t], sample.boxes[t], strength)
    spec = ArtifactSpec(strength, sample.spec.temporal_flicker_amplitude,
                        _combined_tag(strength, sample.spec.temporal_flicker_amplitude))
    return replace(sample, frames=frames, spec=spec)


def apply_temporal_artifact(sample: VideoSample, amplitude: float) -> VideoSample:
    if amplitude <= 0:
        raise ParameterError("temporal artifact amplitude must be > 0 (use the original sample)")
    if amplitude > 1:
        raise ParameterError("temporal artifact amplitude must be <= 1")
    new_brightness = brightness_schedule(len(sample), sample.phase, amplitude)
    delta = new_brightness - sample.brightness
    frames = np.clip(sample.frames + delta[:, None, None, None] * sample.face_mask[:, None], 0.0, 1.0)
    spec = ArtifactSpec(sample.spec.spatial_warp_strength, amplitude,
                        _combined_tag(sample.spec.spatial_warp_strength, amplitude))
    return replace(sample, frames=frames, spec=spec, brightness=new_brightness)


def make_sample(identity_seed, tag, *, length=48, size=32, channels=1,
                spatial_strength=1.0, temporal_amplitude=1.0) -> VideoSample:
    sample = generate_real_sequence(identity_seed, length, size, channels)
    if tag in ("temporal_fake", "combined_fake"):
        sample = apply_temporal_artifact(sample, temporal_amplitude)
    if tag in ("spatial_fake", "combined_fake"):
        sample = apply_spatial_artifact(sample, spatial_strength)
    return sample


def split_counts(n, fractions):
    """Largest-remainder apportionment of ``n`` items over split fractions."""
    fractions = np.asarray(fractions, dtype=float)
    if fractions.shape != (3,) or np.any(fractions < 0) or abs(fractions.sum() - 1.0) > 1e-9:
        raise ParameterError(f"split fractions must be three non-negative values summing to 1, got {list(fractions)}")
    raw = fractions * n
    counts = np.floor(raw + 1e-9).astype(int)
    remainder = n - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:remainder]] += 1
    return [int(c) for c in counts]


SPLITS = ("train", "val", "test")
MANIFEST_FIELDS = ("sample_id", "path", "detections", "tag", "label", "split", "identity_seed")


def generate_dataset(out_dir, counts: dict, splits=(0.6, 0.2, 0.2), seed=0, *, length=48, size=32,
                     channels=1, spatial_strength=1.0, temporal_amplitude=1.0, gap_fraction=0.0):
    """Write a dataset directory: ``manifest.csv``, ``dataset.json`` and per-sample
    frame blobs plus detection CSVs. Splits are stratified per tag and
    identity-disjoint (every sample is a distinct identity)."""
    unknown = set(counts) - set(TAGS)
    if unknown:
        raise ParameterError(f"unknown tags {sorted(unknown)}")
    if not counts or any(int(c) < 1 for c in counts.values()):
        raise ParameterError("every requested tag needs a count >= 1")
    if not 0.0 <= gap_fraction <= 1.0:
        raise ParameterError("gap_fraction must be in [0, 1]")
    per_tag = {tag: split_counts(int(counts[tag]), splits) for tag in TAGS if tag in counts}

    out = Path(out_dir)
    (out / "samples").mkdir(parents=True, exist_ok=True)
    gap_rng = np.random.default_rng([seed, 7])
    rows = []
    index = 0
    for tag, split_sizes in per_tag.items():
        for split, n in zip(SPLITS, split_sizes):
            for _ in range(n):
                identity = seed * 1_000_000 + index
                sample = make_sample(identity, tag, length=length, size=size, channels=channels,
                                     spatial_strength=spatial_strength, temporal_amplitude=temporal_amplitude)
                boxes = sample.boxes.copy()
                if gap_rng.random() < gap_fraction:
                    # one missed detection in the middle leaves no 40-frame run
                    boxes[length // 2] = np.nan
                sid = f"{index:05d}"
                frame_io.write_frames(out / "samples" / f"{sid}.bin", sample.frames)
                det_rows = [(t, *(frame_io.fmt(v) for v in b)) for t, b in enumerate(boxes) if not np.isnan(b[0])]
                frame_io.write_csv(out / "samples" / f"{sid}.det.csv", ("frame", "cx", "cy", "w", "h"), det_rows)
                rows.append((sid, f"samples/{sid}.bin", f"samples/{sid}.det.csv", tag,
                             sample.label, split, identity))
                index += 1
    frame_io.write_csv(out / "manifest.csv", MANIFEST_FIELDS, rows)
    meta = {"seed": seed, "counts": {k: int(v) for k, v in counts.items()}, "splits": list(splits),
            "length": length, "size": size, "channels": channels, "spatial_strength": spatial_strength,
            "temporal_amplitude": temporal_amplitude, "gap_fraction": gap_fraction}
    frame_io.atomic_write_text(out / "dataset.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out


def read_manifest(dataset_dir) -> list[dict]:
    rows = frame_io.read_csv(Path(dataset_dir) / "manifest.csv")
    for r in rows:
        r["label"] = int(r["label"])
        r["identity_seed"] = int(r["identity_seed"])
    return rows


def load_detections(path, length):
    boxes = np.full((length, 4), np.nan)
    for r in frame_io.read_csv(path):
        boxes[int(r["frame"])] = [float(r["cx"]), float(r["cy"]), float(r["w"]), float(r["h"])]
    return boxes


def spec_dict(spec: ArtifactSpec) -> dict:
    return asdict(spec)
