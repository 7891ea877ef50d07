import numpy as np
import pytest

from dfframe import frame_io, pipeline, synthetic
from dfframe.errors import InputError
from dfframe.imaging import bilinear_resample


def _stream(pattern):
    """pattern: list of (present, run_length)."""
    out = []
    for present, n in pattern:
        out += [(10.0, 10.0, 4.0, 4.0) if present else None] * n
    return out


# ---- windows ---------------------------------------------------------------

def test_run_of_exactly_40_gives_one_window():
    assert pipeline.extract_windows(_stream([(True, 40)])) == [range(0, 40)]


def test_run_of_39_gives_none():
    assert pipeline.extract_windows(_stream([(True, 39)])) == []


def test_run_of_100_gives_first_window_only():
    assert pipeline.extract_windows(_stream([(True, 100)])) == [range(0, 40)]


def test_windows_never_span_gaps():
    stream = _stream([(True, 30), (False, 1), (True, 45), (False, 2), (True, 39), (False, 1), (True, 40)])
    wins = pipeline.extract_windows(stream)
    assert wins == [range(31, 71), range(118, 158)]
    for w in wins:
        assert all(stream[i] is not None for i in w)


def test_nan_rows_count_as_missing():
    boxes = np.tile([10.0, 10.0, 4.0, 4.0], (48, 1))
    boxes[24] = np.nan
    assert pipeline.extract_windows(boxes) == []
    assert pipeline.extract_windows(np.tile([10.0, 10.0, 4.0, 4.0], (48, 1))) == [range(0, 40)]


# ---- crops -----------------------------------------------------------------

def test_crop_region_scales_about_centre():
    x0, y0, x1, y1 = pipeline.crop_region((200, 200, 100, 100), (1000, 1000))
    assert (x1 - x0, y1 - y0) == pytest.approx((130, 130), abs=1e-12)
    assert ((x0 + x1) / 2, (y0 + y1) / 2) == pytest.approx((200, 200), abs=1e-12)


def test_unclamped_area_ratio():
    rng = np.random.default_rng(0)
    for _ in range(100):
        w, h = rng.uniform(5, 50, 2)
        cx, cy = rng.uniform(100, 200, 2)
        x0, y0, x1, y1 = pipeline.crop_region((cx, cy, w, h), (400, 400))
        assert abs((x1 - x0) * (y1 - y0) / (w * h) - 1.69) < 1e-9


def test_scale_one_crop_equals_box():
    frame = np.random.default_rng(1).uniform(size=(1, 40, 40))
    # box covering pixels 10..19 x 5..24 exactly
    x0, y0, x1, y1 = pipeline.crop_region((15.0, 15.0, 10.0, 20.0), (40, 40), scale=1.0)
    assert (x0, y0, x1, y1) == (10.0, 5.0, 20.0, 25.0)
    # resampling an integer-aligned region at native size reproduces the pixels
    crop = bilinear_resample(frame, x0, y0, x1, y1, 20, 10)
    np.testing.assert_allclose(crop, frame[:, 5:25, 10:20], atol=1e-12)


def test_corner_box_is_clamped():
    x0, y0, x1, y1 = pipeline.crop_region((5.0, 6.0, 10.0, 12.0), (32, 32))
    # unclamped would be [-1.5, 11.5] x [-1.8, 13.8]
    assert (x0, y0) == (0.0, 0.0)
    assert x1 == pytest.approx(11.5) and y1 == pytest.approx(13.8)
    frame = np.random.default_rng(2).uniform(size=(3, 32, 32))
    out = pipeline.crop_face(frame, (5.0, 6.0, 10.0, 12.0), 16)
    assert out.shape == (3, 16, 16)
    assert out.min() >= frame.min() and out.max() <= frame.max()


@pytest.mark.parametrize("bbox", [(10, 10, 0, 5), (10, 10, 5, 0), (10, 10, -3, 4)])
def test_degenerate_box_rejected(bbox):
    with pytest.raises(InputError):
        pipeline.crop_region(bbox, (32, 32))


def test_box_outside_frame_rejected():
    with pytest.raises(InputError):
        pipeline.crop_region((30, 30, 10, 10), (32, 32))


# ---- normalisation ---------------------------------------------------------

def test_normalize_cases():
    np.testing.assert_array_equal(pipeline.normalize(np.full((1, 2, 2), 255.0)), np.ones((1, 2, 2)))
    np.testing.assert_array_equal(pipeline.normalize(np.zeros((1, 2, 2))), np.zeros((1, 2, 2)))
    assert pipeline.normalize(np.array([[[128.0, 255.0]]]))[0, 0, 0] == pytest.approx(128 / 255)
    x = np.array([[[0.25, 0.75]]])
    np.testing.assert_array_equal(pipeline.normalize(x), x)
    with pytest.raises(InputError):
        pipeline.normalize(np.array([[[-0.1, 0.5]]]))


# ---- whole videos ----------------------------------------------------------

def test_sequence_sample_requires_40_frames():
    with pytest.raises(InputError):
        pipeline.SequenceSample(np.zeros((39, 1, 8, 8)), 0, "original", "x")


def test_preprocess_video_outputs_contract():
    s = synthetic.make_sample(4, "spatial_fake")
    sample = pipeline.preprocess_video(s.frames * 255.0, s.boxes, 16, s.label, s.tag, "v")
    assert sample.frames.shape == (40, 1, 16, 16)
    assert sample.frames.min() >= 0 and sample.frames.max() <= 1
    assert sample.start == 0


def test_preprocess_dataset(tmp_path):
    ds = tmp_path / "ds"
    synthetic.generate_dataset(ds, {"original": 6, "temporal_fake": 6}, seed=5, gap_fraction=0.5)
    pipeline.preprocess_dataset(ds, tmp_path / "pre", 16)
    index = frame_io.read_csv(tmp_path / "pre" / "index.csv")
    excluded = (tmp_path / "pre" / "excluded.txt").read_text().split()
    assert len(index) + len(excluded) == 12
    assert excluded, "gap_fraction 0.5 over 12 videos should exclude at least one"
    for r in index:
        frames = frame_io.read_frames(tmp_path / "pre" / r["path"])
        assert frames.shape == (40, 1, 16, 16)
        assert frames.min() >= 0 and frames.max() <= 1
        assert int(r["start"]) == 0
    data = pipeline.load_preprocessed(tmp_path / "pre")
    assert sum(len(v) for v in data.values()) == len(index)


def test_warp_pretrain_frames_balanced():
    x, y = pipeline.warp_pretrain_frames(5, seed=0, frame_size=32, out_size=16)
    assert x.shape == (10, 1, 16, 16)
    assert y.tolist() == [0, 1] * 5
