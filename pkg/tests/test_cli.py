"""CLI subcommands at reduced scale (every README example runs here)."""

import csv
import json
import os

import pytest

from nalmlab.cli import main


def test_train_writes_trace_and_record(tmp_path, capsys):
    rc = main(["train", "--variant", "nru", "--range", "U[1,2)", "--seed", "0",
               "--iterations", "2000", "--eval-every", "1000",
               "--val-size", "500", "--test-size", "500",
               "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "success=" in out
    trace = tmp_path / "train_nru_0_trace.csv"
    assert trace.exists()
    lines = trace.read_text().strip().split("\n")
    assert lines[0] == "iteration,train_loss,val_loss,extrap_mse"
    assert len(lines) == 4  # iterations 0, 1000, 2000
    meta = json.loads((tmp_path / "train_nru_0.json").read_text())
    assert meta["variant"] == "nru"


def test_train_determinism_byte_identical(tmp_path):
    args = ["train", "--variant", "nmru", "--range", "U[1,2)", "--seed", "3",
            "--iterations", "1000", "--eval-every", "500",
            "--val-size", "400", "--test-size", "400"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    ta = (tmp_path / "a" / "train_nmru_3_trace.csv").read_bytes()
    tb = (tmp_path / "b" / "train_nmru_3_trace.csv").read_bytes()
    assert ta == tb


def test_sweep_and_report(tmp_path, capsys):
    rc = main(["sweep", "--preset", "no_redundancy", "--kinds", "nmu",
               "--ranges", "U[1,2)", "--seeds", "2", "--parallel", "1",
               "--iterations", "200", "--eval-every", "100",
               "--val-size", "300", "--test-size", "300",
               "--out", str(tmp_path)])
    assert rc == 0
    results = tmp_path / "results.csv"
    assert results.exists()
    with open(results, newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 2
    capsys.readouterr()
    assert main(["report", str(results)]) == 0
    out = capsys.readouterr().out
    assert "U[1,2)" in out and "nmu" in out


def test_sweep_config_file_with_flag_override(tmp_path, capsys):
    cfg = {
        "preset": "no_redundancy",
        "kinds": ["nmu"],
        "ranges": ["U[1,2)"],
        "seeds": 1,
        "parallel": 1,
        "out": str(tmp_path / "from_file"),
        "overrides": {"iterations": 100, "eval_every": 100,
                      "val_size": 200, "test_size": 200},
    }
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(cfg))
    # flag overrides the config file's output directory
    rc = main(["sweep", "--config", str(path), "--out", str(tmp_path / "cli")])
    assert rc == 0
    assert (tmp_path / "cli" / "results.csv").exists()
    assert not (tmp_path / "from_file").exists()


def test_landscape_grid_size(tmp_path):
    out = tmp_path / "s.csv"
    rc = main(["landscape", "--kind", "nmru", "--res", "101",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 1 + 101 * 101


def test_verify_grad_exit_codes(capsys):
    rc = main(["verify-grad", "--kind", "nru", "--trials", "10"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "max_rel_err" in out and "closed-form" in out


def test_thresholds_table(capsys):
    rc = main(["thresholds", "--task", "reciprocal1", "--kinds", "nru,realnpu",
               "--test-size", "2000"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "U[0,0.0001)" in out
    assert "nru" in out


def test_unknown_subcommand_fails():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_out_dir_env_default(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("NALMLAB_OUT", str(tmp_path))
    rc = main(["landscape", "--kind", "nru", "--res", "21"])
    assert rc == 0
    assert (tmp_path / "surface_nru.csv").exists()
