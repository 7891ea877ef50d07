import hashlib
from collections import Counter

import numpy as np
import pytest
from scipy.stats import ks_2samp
from sklearn.linear_model import LogisticRegression

from dfframe import synthetic
from dfframe.errors import ParameterError
from dfframe.imaging import high_frequency_energy


def _region_stats(sample, t):
    y0, y1, x0, x1 = synthetic.spatial_region(sample.boxes[t], sample.frames.shape[2:])
    return sample.frames[t, :, y0:y1, x0:x1]


# ---- real sequences --------------------------------------------------------

def test_same_seed_is_bit_identical():
    a = synthetic.generate_real_sequence(42)
    b = synthetic.generate_real_sequence(42)
    assert a.frames.tobytes() == b.frames.tobytes()
    assert a.boxes.tobytes() == b.boxes.tobytes()


def test_different_seeds_differ():
    a = synthetic.generate_real_sequence(1)
    b = synthetic.generate_real_sequence(2)
    assert not np.array_equal(a.frames, b.frames)


@pytest.mark.parametrize("seed", range(10))
def test_pixels_in_unit_range_and_slow_drift(seed):
    s = synthetic.generate_real_sequence(seed, channels=3 if seed % 2 else 1)
    assert s.frames.min() >= 0.0 and s.frames.max() <= 1.0
    diffs = np.mean(np.abs(np.diff(s.frames, axis=0)), axis=(1, 2, 3))
    assert diffs.max() < 0.05
    assert s.label == 0 and s.tag == "original"


def test_short_length_rejected():
    with pytest.raises(ParameterError):
        synthetic.generate_real_sequence(0, length=39)


def test_boxes_inside_frame():
    for seed in range(20):
        s = synthetic.generate_real_sequence(seed)
        cx, cy, w, h = s.boxes.T
        assert np.all(cx - w / 2 >= 0) and np.all(cx + w / 2 <= 32)
        assert np.all(cy - h / 2 >= 0) and np.all(cy + h / 2 <= 32)


def test_real_windows_share_brightness_multiset():
    # one sine period per 40 frames: every window sees the same offsets
    s = synthetic.generate_real_sequence(7, length=48)
    ref = np.sort(s.brightness[:40])
    for start in range(9):
        np.testing.assert_allclose(np.sort(s.brightness[start:start + 40]), ref, atol=1e-12)


# ---- artifact specs --------------------------------------------------------

@pytest.mark.parametrize("spatial,temporal,tag", [
    (0.5, 0.0, "original"), (0.0, 0.0, "spatial_fake"), (0.3, 0.0, "temporal_fake"),
    (0.0, 0.5, "combined_fake"), (1.5, 0.0, "spatial_fake"), (0.0, 0.0, "deepfakes"),
])
def test_artifact_spec_inconsistencies(spatial, temporal, tag):
    with pytest.raises(ParameterError):
        synthetic.ArtifactSpec(spatial, temporal, tag)


def test_zero_strengths_rejected_and_warp_zero_is_identity():
    s = synthetic.generate_real_sequence(3)
    with pytest.raises(ParameterError):
        synthetic.apply_spatial_artifact(s, 0.0)
    with pytest.raises(ParameterError):
        synthetic.apply_temporal_artifact(s, 0.0)
    np.testing.assert_array_equal(synthetic.warp_frame(s.frames[0], s.boxes[0], 0.0), s.frames[0])


def test_make_sample_labels():
    for tag in synthetic.TAGS:
        s = synthetic.make_sample(11, tag)
        assert s.tag == tag
        assert s.label == int(tag != "original")
        assert s.frames.min() >= 0 and s.frames.max() <= 1


# ---- spatial artifact ------------------------------------------------------

def test_spatial_artifact_halves_high_frequency_energy():
    ratios = []
    for seed in range(20):
        real = synthetic.generate_real_sequence(seed)
        fake = synthetic.apply_spatial_artifact(real, 1.0)
        for t in (0, 20, 39):
            ratios.append(high_frequency_energy(_region_stats(fake, t)) /
                          high_frequency_energy(_region_stats(real, t)))
    assert max(ratios) <= 0.5


def test_spatial_artifact_leaves_outside_region_untouched():
    real = synthetic.generate_real_sequence(5)
    fake = synthetic.apply_spatial_artifact(real, 1.0)
    y0, y1, x0, x1 = synthetic.spatial_region(real.boxes[0], (32, 32))
    outside = np.ones((32, 32), bool)
    outside[y0:y1, x0:x1] = False
    np.testing.assert_array_equal(fake.frames[0][:, outside], real.frames[0][:, outside])


def _probe_frames(tag, seeds, frames_per_video=10):
    xs = []
    for seed in seeds:
        s = synthetic.make_sample(seed, tag)
        xs.append(s.frames[:40:40 // frames_per_video].reshape(frames_per_video, -1))
    return np.concatenate(xs)


def _probe_accuracy(fake_tag):
    train_seeds, test_seeds = range(0, 60), range(1000, 1040)
    # reals and fakes come from disjoint identities, like the dataset splits
    xr = _probe_frames("original", train_seeds)
    xf = _probe_frames(fake_tag, [s + 500 for s in train_seeds])
    x = np.concatenate([xr, xf])
    y = np.r_[np.zeros(len(xr)), np.ones(len(xf))]
    probe = LogisticRegression(C=10.0, max_iter=5000).fit(x, y)
    tr = _probe_frames("original", test_seeds)
    tf = _probe_frames(fake_tag, [s + 500 for s in test_seeds])
    xt = np.concatenate([tr, tf])
    yt = np.r_[np.zeros(len(tr)), np.ones(len(tf))]
    return probe.score(xt, yt)


def _region_features(tag, seeds):
    """Per-frame log high-pass energy, mean and std of the face region."""
    feats = []
    for seed in seeds:
        s = synthetic.make_sample(seed, tag)
        for t in range(0, 40, 4):
            region = _region_stats(s, t)
            feats.append([np.log(high_frequency_energy(region)), region.mean(), region.std()])
    return np.asarray(feats)


def _feature_probe_accuracy(fake_tag):
    train = np.concatenate([_region_features("original", range(40)), _region_features(fake_tag, range(500, 540))])
    test = np.concatenate([_region_features("original", range(1000, 1030)),
                           _region_features(fake_tag, range(1500, 1530))])
    ytr = np.r_[np.zeros(400), np.ones(400)]
    yte = np.r_[np.zeros(300), np.ones(300)]
    probe = LogisticRegression(max_iter=1000).fit(train, ytr)
    return probe.score(test, yte)


def test_linear_probe_separates_spatial_fakes():
    assert _feature_probe_accuracy("spatial_fake") >= 0.9


def test_feature_probe_blind_to_temporal_fakes():
    assert _feature_probe_accuracy("temporal_fake") <= 0.6


def test_pixel_probe_blind_to_temporal_fakes():
    assert _probe_accuracy("temporal_fake") <= 0.6


# ---- temporal artifact -----------------------------------------------------

def test_temporal_fake_marginals_match_real():
    real_stats, fake_stats = [], []
    for seed in range(60):
        real = synthetic.generate_real_sequence(seed)
        fake = synthetic.make_sample(seed + 10_000, "temporal_fake")
        real_stats += [float(_region_stats(real, t).mean()) for t in range(0, 40, 5)]
        fake_stats += [float(_region_stats(fake, t).mean()) for t in range(0, 40, 5)]
    assert ks_2samp(real_stats, fake_stats).pvalue > 0.05


def test_temporal_offsets_form_same_multiset_as_real():
    real = synthetic.generate_real_sequence(9)
    fake = synthetic.apply_temporal_artifact(real, 1.0)
    # same phase, so the 40-frame offset sets coincide as multisets
    np.testing.assert_allclose(np.sort(fake.brightness[:40]), np.sort(real.brightness[:40]), atol=1e-12)


def test_temporal_fake_difference_energy():
    ratios = []
    for seed in range(20):
        real = synthetic.generate_real_sequence(seed)
        fake = synthetic.apply_temporal_artifact(real, 1.0)
        e_real = np.mean(np.diff(real.frames[:40], axis=0) ** 2)
        e_fake = np.mean(np.diff(fake.frames[:40], axis=0) ** 2)
        ratios.append(e_fake / e_real)
    assert min(ratios) >= 3.0


# ---- dataset ---------------------------------------------------------------

def test_split_counts_exact():
    assert synthetic.split_counts(140, (100 / 140, 20 / 140, 20 / 140)) == [100, 20, 20]
    assert sum(synthetic.split_counts(7, (0.5, 0.25, 0.25))) == 7


@pytest.mark.parametrize("fractions", [(0.5, 0.5, 0.5), (1.2, -0.1, -0.1), (0.5, 0.5)])
def test_split_counts_rejects_impossible(fractions):
    with pytest.raises(ParameterError):
        synthetic.split_counts(10, fractions)


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    synthetic.generate_dataset(out, {"original": 14, "temporal_fake": 7}, splits=(10 / 14, 2 / 14, 2 / 14), seed=3)
    return out


def test_manifest_counts(dataset):
    rows = synthetic.read_manifest(dataset)
    counts = Counter((r["tag"], r["split"]) for r in rows)
    assert counts[("original", "train")] == 10
    assert counts[("original", "val")] == 2
    assert counts[("original", "test")] == 2
    assert sum(v for (t, _), v in counts.items() if t == "temporal_fake") == 7


def test_identity_disjoint_splits(dataset):
    rows = synthetic.read_manifest(dataset)
    by_split = {s: {r["identity_seed"] for r in rows if r["split"] == s} for s in synthetic.SPLITS}
    assert not by_split["train"] & by_split["val"]
    assert not by_split["train"] & by_split["test"]
    assert not by_split["val"] & by_split["test"]


def test_regeneration_is_byte_identical(dataset, tmp_path):
    synthetic.generate_dataset(tmp_path, {"original": 14, "temporal_fake": 7}, splits=(10 / 14, 2 / 14, 2 / 14),
                               seed=3)

    def digest(root):
        h = hashlib.sha256()
        for p in sorted(root.rglob("*")):
            if p.is_file():
                h.update(str(p.relative_to(root)).encode())
                h.update(p.read_bytes())
        return h.hexdigest()

    assert digest(tmp_path) == digest(dataset)


def test_unknown_tag_rejected(tmp_path):
    with pytest.raises(ParameterError):
        synthetic.generate_dataset(tmp_path, {"faceswap": 3})


def test_gap_fraction_removes_detection(tmp_path):
    synthetic.generate_dataset(tmp_path, {"original": 4}, seed=1, gap_fraction=1.0)
    for r in synthetic.read_manifest(tmp_path):
        boxes = synthetic.load_detections(tmp_path / r["detections"], 48)
        assert np.isnan(boxes[24]).all()
        assert np.isfinite(np.delete(boxes, 24, axis=0)).all()
