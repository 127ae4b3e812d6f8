import json

import pytest

from melodykit.cli import main


@pytest.fixture(scope="module")
def prepared(tmp_path_factory, corpus_dir):
    out = tmp_path_factory.mktemp("data")
    assert main(["prepare", "--in", str(corpus_dir), "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def trained(tmp_path_factory, prepared):
    out = tmp_path_factory.mktemp("run")
    rc = main([
        "train", "--dataset", str(prepared / "control.mmtd"), "--out", str(out),
        "--cell", "lstm", "--units", "16", "--embedding", "8",
        "--epochs", "2", "--batch-size", "4", "--seq-len", "20",
    ])
    assert rc == 0
    return out


def test_prepare_outputs(prepared):
    for variant in ("control", "interval", "db12"):
        assert (prepared / f"{variant}.mmtd").exists()
        assert (prepared / f"{variant}.mmtd.json").exists()


def test_prepare_missing_dir(tmp_path):
    assert main(["prepare", "--in", str(tmp_path / "nope"), "--out", str(tmp_path)]) == 1


def test_baseline(corpus_dir, tmp_path, capsys):
    out = tmp_path / "baseline.json"
    assert main(["baseline", "--in", str(corpus_dir), "--out", str(out)]) == 0
    captured = capsys.readouterr().out
    assert "CMM" in captured and "reference corpus baseline" in captured
    report = json.loads(out.read_text())
    assert len(report["per_melody"]) == 13
    assert out.with_suffix(".png").exists()


def test_train_outputs(trained):
    assert (trained / "curve.csv").exists()
    assert (trained / "curve.png").exists()
    assert (trained / "final.mmck").exists()
    assert (trained / "best.mmck").exists()
    lines = (trained / "curve.csv").read_text().strip().splitlines()
    assert len(lines) == 3


def test_sample_evaluate_compare(trained, prepared, tmp_path, capsys):
    songs = tmp_path / "songs"
    rc = main([
        "sample", "--checkpoint", str(trained / "final.mmck"),
        "--dataset", str(prepared / "control.mmtd"), "--out", str(songs),
        "--songs", "5", "--notes", "10", "--name", "control-lstm",
    ])
    assert rc == 0
    manifest = json.loads((songs / "manifest.json").read_text())
    assert len(manifest["songs"]) == 5
    assert (songs / "song_000.mid").exists()
    assert (songs / "metrics.png").exists()

    report_path = tmp_path / "eval.json"
    rc = main(["evaluate", "--manifest", str(songs / "manifest.json"),
               "--out", str(report_path)])
    assert rc == 0
    assert report_path.exists() and report_path.with_suffix(".png").exists()

    cmp_path = tmp_path / "cmp.json"
    rc = main(["compare", str(songs / "manifest.json"), str(report_path),
               "--out", str(cmp_path)])
    assert rc == 0
    capsys.readouterr()
    payload = json.loads(cmp_path.read_text())
    assert len(payload["rows"]) == 2
    assert cmp_path.with_suffix(".png").exists()
    assert cmp_path.with_suffix(".txt").exists()


def test_sweep(prepared, tmp_path):
    out = tmp_path / "sweep"
    rc = main([
        "sweep", "--dataset", str(prepared / "control.mmtd"), "--out", str(out),
        "--cells", "lstm,gru", "--units", "8,16", "--embedding", "8",
        "--epochs", "1", "--batch-size", "4", "--seq-len", "20",
    ])
    assert rc == 0
    for cell in ("lstm", "gru"):
        for units in (8, 16):
            assert (out / f"curve_{cell}_{units}.csv").exists()
    assert (out / "sweep_train.png").exists()
    assert (out / "sweep_val.png").exists()


def test_gradcheck(capsys):
    assert main(["gradcheck"]) == 0
    out = capsys.readouterr().out
    assert "lstm" in out and "gru" in out and "ok" in out


def test_evaluate_requires_input():
    assert main(["evaluate"]) == 2


def test_unknown_command_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code != 0


def test_sample_vocab_mismatch(trained, prepared, tmp_path):
    rc = main([
        "sample", "--checkpoint", str(trained / "final.mmck"),
        "--dataset", str(prepared / "interval.mmtd"), "--out", str(tmp_path / "x"),
        "--songs", "1",
    ])
    assert rc == 1
