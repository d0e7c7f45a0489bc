import json

import pytest

from srlrefine.cli import main

TINY = ["d_w=4", "d_dep=2", "d_pos=2", "d_h=3", "n_layers=1", "d_rho0=3", "d_rho1=3", "d_pi=2",
        "d_g=3", "d_r=3", "epochs=2", "batch_size=8", "learning_rate=0.01"]


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert main(["gen-synth", "--seed", "7", "--sentences", "20", "--out", str(data),
                 "min_gap=1", "max_gap=3"]) == 0
    assert main(["train-baseline", "--train", str(data / "train.conll"), "--dev", str(data / "dev.conll"),
                 "--seed", "1", "--out", str(root / "base.ckpt"), *TINY]) == 0
    assert main(["train-refiner", "--train", str(data / "train.conll"), "--dev", str(data / "dev.conll"),
                 "--baseline", str(root / "base.ckpt"), "--seed", "1", "--iterations", "2",
                 "--out", str(root / "ref.ckpt"), "epochs=2"]) == 0
    return root


def test_gen_synth_outputs(workspace):
    data = workspace / "data"
    for name in ("corpus.conll", "manifest.json", "train.conll", "dev.conll", "test.conll"):
        assert (data / name).exists()
    assert json.loads((data / "manifest.json").read_text())["config"]["sentences"] == 20


def test_gen_synth_is_byte_identical(workspace, tmp_path):
    assert main(["gen-synth", "--seed", "7", "--sentences", "20", "--out", str(tmp_path),
                 "min_gap=1", "max_gap=3"]) == 0
    for name in ("corpus.conll", "train.conll", "dev.conll", "test.conll"):
        assert (tmp_path / name).read_bytes() == (workspace / "data" / name).read_bytes()


def test_training_writes_checkpoint_and_log(workspace, tmp_path):
    log = (workspace / "base.ckpt.log").read_text()
    assert "epoch=2 split=dev" in log
    data = workspace / "data"
    again = tmp_path / "base.ckpt"
    assert main(["train-baseline", "--train", str(data / "train.conll"), "--dev", str(data / "dev.conll"),
                 "--seed", "1", "--out", str(again), *TINY]) == 0
    assert again.read_bytes() == (workspace / "base.ckpt").read_bytes()


def test_evaluate_gold_against_gold(workspace, tmp_path):
    test = workspace / "data" / "test.conll"
    assert main(["evaluate", str(test), str(test), "--out", str(tmp_path / "ev")]) == 0
    record = json.loads((tmp_path / "ev.json").read_text().splitlines()[0])
    assert record["f1"] == 1.0
    assert "labeled F1" in (tmp_path / "ev.txt").read_text()


def test_predict_evaluate_round(workspace, tmp_path):
    test = workspace / "data" / "test.conll"
    out = tmp_path / "pred.conll"
    assert main(["predict", "--input", str(test), "--baseline", str(workspace / "base.ckpt"),
                 "--refiner", str(workspace / "ref.ckpt"), "--out", str(out)]) == 0
    assert main(["evaluate", str(test), str(out), "--out", str(tmp_path / "ev")]) == 0
    assert 0.0 <= json.loads((tmp_path / "ev.json").read_text().splitlines()[0])["f1"] <= 1.0


def test_zero_iterations_equals_baseline_decoding(workspace, tmp_path):
    test = workspace / "data" / "test.conll"
    base_only, zero = tmp_path / "b.conll", tmp_path / "z.conll"
    assert main(["predict", "--input", str(test), "--baseline", str(workspace / "base.ckpt"),
                 "--mode", "baseline", "--out", str(base_only)]) == 0
    assert main(["predict", "--input", str(test), "--baseline", str(workspace / "base.ckpt"),
                 "--refiner", str(workspace / "ref.ckpt"), "--iterations", "0", "--out", str(zero)]) == 0
    assert zero.read_bytes() == base_only.read_bytes()


def test_analyze_outputs(workspace, tmp_path):
    test = workspace / "data" / "test.conll"
    pred = tmp_path / "pred.conll"
    main(["predict", "--input", str(test), "--baseline", str(workspace / "base.ckpt"),
          "--refiner", str(workspace / "ref.ckpt"), "--out", str(pred)])
    out = tmp_path / "an"
    assert main(["analyze", str(test), str(pred), str(pred), "--out", str(out)]) == 0
    for name in ("violations.txt", "violations.json", "confusion.csv", "correction.csv"):
        assert (out / name).exists()
    # identical baseline and refined files correct nothing
    rows = (out / "correction.csv").read_text().splitlines()[1:]
    assert all(int(c) == 0 for row in rows for c in row.split(",")[1:])


def test_errors_exit_nonzero_with_one_line(workspace, tmp_path, capsys):
    data = workspace / "data"
    code = main(["train-baseline", "--train", str(data / "train.conll"), "--out", str(tmp_path / "x"),
                 "no_such_key=1"])
    captured = capsys.readouterr()
    assert code == 1
    assert captured.out == ""
    assert captured.err.strip().count("\n") == 0 and "error" in captured.err
    assert main(["evaluate", str(tmp_path / "missing.conll"), str(data / "test.conll")]) == 1
    assert main(["train-refiner", "--train", str(data / "train.conll"), "--baseline",
                 str(workspace / "base.ckpt"), "--expect-baseline", "0" * 64,
                 "--out", str(tmp_path / "r")]) == 1
    assert "Traceback" not in capsys.readouterr().err


def test_unknown_flag_fails_fast(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["evaluate", "a", "b", "--bogus"])
    assert exc.value.code != 0


@pytest.mark.parametrize("command", ["gen-synth", "train-baseline", "train-refiner", "predict",
                                     "evaluate", "analyze"])
def test_help_lists_threads(command, capsys):
    with pytest.raises(SystemExit):
        main([command, "--help"])
    assert "--threads" in capsys.readouterr().out
