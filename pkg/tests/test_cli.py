import json

import pytest

from dfframe import cli, frame_io

TINY = {
    "dataset": {"counts": {"original": 8, "spatial_fake": 4, "temporal_fake": 4}, "splits": [0.5, 0.25, 0.25]},
    "warp_pretrain": {"identities": 20, "epochs": 2, "patience": 1, "min_accuracy": 0.0},
    "train": {"auto": {"max_epochs": 2, "patience": 1, "frames_per_video": 2},
              "warp": {"max_epochs": 2, "patience": 1, "frames_per_video": 2},
              "tauto": {"max_epochs": 2, "patience": 1},
              "twarp": {"max_epochs": 2, "patience": 1}},
}


def _cfg(tmp_path, doc=TINY, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _run(*args):
    return cli.run(list(args))


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """One tiny run taken through every stage."""
    root = tmp_path_factory.mktemp("cli")
    cfg, out = _cfg(root), str(root / "run")
    assert _run("generate", "--config", cfg, "--out", out) == 0
    assert _run("preprocess", "--config", cfg, "--out", out) == 0
    for cell in ("auto", "tauto", "warp", "twarp"):
        assert _run("train", "--cell", cell, "--config", cfg, "--out", out) == 0
    assert _run("evaluate", "--config", cfg, "--out", out) == 0
    return root, cfg, root / "run"


# ---- generate / config -----------------------------------------------------

def test_generate_twice_same_checksums(tmp_path):
    cfg = _cfg(tmp_path)
    sums = []
    for name in ("a", "b"):
        assert _run("generate", "--config", cfg, "--out", str(tmp_path / name)) == 0
        manifest = json.loads((tmp_path / name / "manifest.json").read_text())
        sums.append(manifest["stages"]["generate"]["artifacts"])
    assert sums[0] == sums[1]


def test_invalid_split_exits_2(tmp_path, capsys):
    doc = {"dataset": {"splits": [0.5, 0.5, 0.5]}}
    assert _run("generate", "--config", _cfg(tmp_path, doc), "--out", str(tmp_path / "r")) == 2
    assert "splits" in capsys.readouterr().err


def test_unknown_key_exits_2(tmp_path, capsys):
    assert _run("generate", "--config", _cfg(tmp_path, {"dataset": {"fps": 30}}), "--out", str(tmp_path)) == 2
    assert "dataset.fps" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert _run("generate", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)) == 2


def test_config_is_stored_and_mismatch_refused(tmp_path, capsys):
    out = str(tmp_path / "r")
    assert _run("analytics", "--out", out) == 0
    assert json.loads((tmp_path / "r" / "config.json").read_text())["seed"] == 0
    assert _run("analytics", "--out", out, "--seed", "5") == 2
    assert "different config" in capsys.readouterr().err


def test_env_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("DFFRAME_OUT", str(tmp_path / "env"))
    assert _run("analytics") == 0
    runs = list((tmp_path / "env").glob("run-*"))
    assert len(runs) == 1 and (runs[0] / "analytics" / "balance.csv").exists()


# ---- stage ordering --------------------------------------------------------

def test_preprocess_without_dataset_exits_3(tmp_path, capsys):
    assert _run("preprocess", "--config", _cfg(tmp_path), "--out", str(tmp_path / "r")) == 3
    assert "generate" in capsys.readouterr().err


def test_dependent_cell_needs_source(tmp_path, capsys):
    cfg, out = _cfg(tmp_path), str(tmp_path / "r")
    assert _run("generate", "--config", cfg, "--out", out) == 0
    assert _run("preprocess", "--config", cfg, "--out", out) == 0
    assert _run("train", "--cell", "tauto", "--config", cfg, "--out", out) == 3
    err = capsys.readouterr().err
    assert "Auto" in err and "train 'auto' first" in err


def test_evaluate_without_checkpoints_exits_3(tmp_path, capsys):
    assert _run("evaluate", "--config", _cfg(tmp_path), "--out", str(tmp_path / "r")) == 3
    assert "missing" in capsys.readouterr().err


def test_unknown_cell_is_usage_error():
    with pytest.raises(SystemExit) as info:
        _run("train", "--cell", "meso")
    assert info.value.code == 2


# ---- full tiny run ---------------------------------------------------------

def test_each_train_writes_one_checkpoint_and_log(trained):
    _, _, run = trained
    names = sorted(p.name for p in (run / "models").iterdir())
    assert names == sorted(f"{c}.{ext}" for c in ("auto", "tauto", "warp", "twarp") for ext in ("ckpt", "log.jsonl"))


def test_rerun_gives_same_val_accuracy(trained, tmp_path):
    root, cfg, run = trained
    before = json.loads((run / "manifest.json").read_text())["stages"]["train.auto"]["best_val_accuracy"]
    assert _run("train", "--cell", "auto", "--config", cfg, "--out", str(run)) == 0
    after = json.loads((run / "manifest.json").read_text())["stages"]["train.auto"]["best_val_accuracy"]
    assert before == after


def test_evaluate_outputs(trained):
    _, _, run = trained
    ev = run / "eval"
    for name in ("auc.csv", "precision_at_recall.csv", "mcnemar.csv", "pr_curves.svg", "report.txt"):
        assert (ev / name).exists()
    rows = frame_io.read_csv(ev / "mcnemar.csv")
    assert len(rows) == 2 * 3  # two pairs over the three tags present
    assert {r["decision"] for r in rows} <= {"reject H0", "accept H0"}


def test_report_summarises(trained, capsys):
    _, cfg, run = trained
    assert _run("report", "--config", cfg, "--out", str(run)) == 0
    text = capsys.readouterr().out
    assert "TWarp" in text and (run / "report.txt").exists()


# ---- analytics -------------------------------------------------------------

def _balance(tmp_path, profiles, *extra):
    path = tmp_path / "profiles.csv"
    path.write_text("name,n,k\n" + "".join(f"{n},{a},{b}\n" for n, a, b in profiles))
    assert _run("analytics", "--profiles", str(path), "--out", str(tmp_path / "r"), *extra) == 0
    return {r["subgroup"]: r for r in frame_io.read_csv(tmp_path / "r" / "analytics" / "balance.csv")}


def test_analytics_single_subgroup(tmp_path):
    rows = _balance(tmp_path, [("all", 6, 3)])
    assert float(rows["all"]["amplification"]) == 1.0


def test_analytics_doubling_k(tmp_path):
    rows = _balance(tmp_path, [("A", 10, 4), ("B", 10, 2)], "--check-enumeration")
    assert int(rows["A"]["deepfakes"]) == 4 * int(rows["B"]["deepfakes"])
    assert int(rows["A"]["real_videos"]) == 2 * int(rows["B"]["real_videos"])


def test_analytics_bad_profiles_exit_3(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("name,n,k\nA,0,1\nB,3,0\n")
    assert _run("analytics", "--profiles", str(path), "--out", str(tmp_path / "r")) == 3
