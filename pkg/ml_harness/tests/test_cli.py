"""End-to-end command-line runs."""

import os

from ml_harness.cli import main

TRAIN_FLAGS = ["--epochs", "1", "--steps-per-epoch", "2", "--batch-size", "4",
               "--crop", "64", "--base", "8", "--critic-steps", "1",
               "--schedule-step", "1"]


def test_train_then_evaluate(tiny_manifest, tmp_path, capsys):
    out = str(tmp_path / "models")
    rc = main(["train-upsampler", tiny_manifest, "--out", out] + TRAIN_FLAGS)
    assert rc == 0
    stdout = capsys.readouterr().out
    assert "checkpoint:" in stdout and "history:" in stdout
    ckpt = os.path.join(out, "upsampler.pt")
    assert os.path.exists(ckpt)
    assert os.path.exists(os.path.join(out, "upsampler_history.csv"))

    table = str(tmp_path / "eval.csv")
    rc = main(["evaluate", tiny_manifest, "--upsampler", ckpt, "--out", table])
    assert rc == 0
    stdout = capsys.readouterr().out
    assert "ssim=" in stdout and "upsampled" in stdout
    assert os.path.exists(table)


def test_train_segmenter_smoke(tiny_manifest, tmp_path, capsys):
    out = str(tmp_path / "models")
    rc = main(["train-segmenter", tiny_manifest, "--out", out] + TRAIN_FLAGS)
    assert rc == 0
    assert os.path.exists(os.path.join(out, "segmenter.pt"))


def test_missing_manifest_exits_1(tmp_path, capsys):
    rc = main(["evaluate", str(tmp_path / "none" / "manifest.txt")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_invalid_config_exits_2(tiny_manifest, tmp_path, capsys):
    rc = main(["train-upsampler", tiny_manifest, "--out", str(tmp_path),
               "--epochs", "0"])
    assert rc == 2
    assert "invalid configuration" in capsys.readouterr().err
