"""Sweep orchestration: presets, resumability, aggregation."""

import csv
import os

import numpy as np
import pytest

from nalmlab.sweep import (PRESETS, RESULT_COLUMNS, VARIANTS, SweepSpec,
                           aggregate, make_train_config, run_key, run_sweep,
                           write_summary_csv)

FAST = {"iterations": 200, "eval_every": 100, "val_size": 300, "test_size": 300}


def _spec(out, **kw):
    base = dict(preset="no_redundancy", variants=("nmu",),
                range_labels=("U[1,2)",), seeds=(0, 1), parallelism=1,
                out_dir=str(out), overrides=dict(FAST))
    base.update(kw)
    return SweepSpec(**base)


def _read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestPresets:
    def test_catalog_matches_experiment_tables(self):
        no_red = PRESETS["no_redundancy"]
        assert len(no_red.ranges) == 9
        assert no_red.input_size == 2
        red = PRESETS["redundancy"]
        assert red.input_size == 10
        assert len(PRESETS["distributions"].ranges) == 6
        assert len(PRESETS["mixed_sign"].ranges) == 5
        assert len(PRESETS["div_small_reciprocal1"].ranges) == 5

    def test_paper_hyperparameters(self):
        task = PRESETS["no_redundancy"].task_for("U[1,2)")
        nru = make_train_config(VARIANTS["nru"], "no_redundancy", task, 0, {})
        assert nru.learning_rate == 1.0 and nru.iterations == 50000
        disc = [r for r in nru.reg if r.kind == "discretization"][0]
        assert (disc.lam_start, disc.lam_end, disc.lam_hat) == (20000, 35000, 10.0)

        nmru = make_train_config(VARIANTS["nmru"], "no_redundancy", task, 0, {})
        assert nmru.learning_rate == 1e-2 and nmru.grad_norm_clip == 1.0

        rnpu = make_train_config(VARIANTS["realnpu"], "no_redundancy", task, 0, {})
        assert rnpu.learning_rate == 5e-3 and rnpu.constrained_init
        kinds = sorted(r.kind for r in rnpu.reg)
        assert kinds == ["discretization", "l1"]
        l1 = [r for r in rnpu.reg if r.kind == "l1"][0]
        assert (l1.beta_start, l1.beta_end) == (1e-9, 1e-7)
        assert (l1.beta_growth, l1.beta_step) == (10.0, 10000)
        disc = [r for r in rnpu.reg if r.kind == "discretization"][0]
        assert (disc.lam_start, disc.lam_end, disc.lam_hat) == (40000, 50000, 1.0)

        base = make_train_config(VARIANTS["realnpu_baseline"], "no_redundancy",
                                 task, 0, {})
        assert not base.clip_after_step and not base.constrained_init
        assert [r.kind for r in base.reg] == ["l1"]

        task10 = PRESETS["redundancy"].task_for("U[1,2)")
        nru10 = make_train_config(VARIANTS["nru"], "redundancy", task10, 0, {})
        assert nru10.learning_rate == 1e-3 and nru10.iterations == 100000
        disc = [r for r in nru10.reg if r.kind == "discretization"][0]
        assert (disc.lam_start, disc.lam_end) == (50000, 75000)

    def test_mixed_sign_dataset_signs(self):
        task = PRESETS["mixed_sign"].task_for("ms1")
        from nalmlab.data import build_batch
        x, _ = build_batch(task, "train", 200, np.random.default_rng(0))
        assert np.all(x[:, 0] < 0) and np.all(x[:, 1] > 0)

    def test_small_value_preset_strips_regularization(self):
        p = PRESETS["div_small_reciprocal1"]
        task = p.task_for("U[0,0.01)")
        cfg = make_train_config(VARIANTS["nru"], p.setting, task, 0,
                                dict(p.overrides))
        assert cfg.reg == ()
        assert cfg.iterations == 5000
        assert cfg.threshold_mode == "golden"

    def test_unknown_range_rejected(self):
        with pytest.raises(ValueError, match="not in preset"):
            PRESETS["no_redundancy"].task_for("U[3,4)")


class TestRunSweep:
    def test_writes_results_and_summary(self, tmp_path):
        summary = run_sweep(_spec(tmp_path))
        rows = _read_rows(tmp_path / "results.csv")
        assert len(rows) == 2
        assert tuple(rows[0].keys()) == RESULT_COLUMNS
        g = summary.group("nmu", "U[1,2)")
        assert g.seeds == 2
        assert os.path.exists(tmp_path / "summary.csv")

    def test_empty_seed_list(self, tmp_path):
        summary = run_sweep(_spec(tmp_path, seeds=()))
        assert summary.groups == []

    def test_resume_skips_completed_and_matches_uninterrupted(self, tmp_path):
        full_dir = tmp_path / "full"
        part_dir = tmp_path / "part"
        run_sweep(_spec(full_dir, seeds=(0, 1, 2)))
        run_sweep(_spec(part_dir, seeds=(0,)))
        before = {r["run_key"]: r for r in _read_rows(part_dir / "results.csv")}
        run_sweep(_spec(part_dir, seeds=(0, 1, 2)))
        resumed = {r["run_key"]: r for r in _read_rows(part_dir / "results.csv")}
        uninterrupted = {r["run_key"]: r for r in _read_rows(full_dir / "results.csv")}
        assert set(resumed) == set(uninterrupted)
        for key, row in resumed.items():
            if key in before:
                assert row == before[key]  # untouched on resume
            a = {k: v for k, v in row.items() if k != "wall_secs"}
            b = {k: v for k, v in uninterrupted[key].items() if k != "wall_secs"}
            assert a == b

    def test_run_keys_stable(self):
        task = PRESETS["no_redundancy"].task_for("U[1,2)")
        assert run_key("nru", task, 3) == run_key("nru", task, 3)
        assert run_key("nru", task, 3) != run_key("nru", task, 4)
        assert run_key("nru", task, 3) != run_key("nmru", task, 3)

    def test_parallel_matches_sequential(self, tmp_path):
        seq = run_sweep(_spec(tmp_path / "seq", parallelism=1, seeds=(0, 1)))
        par = run_sweep(_spec(tmp_path / "par", parallelism=2, seeds=(0, 1)))
        a = {r["run_key"]: {k: v for k, v in r.items() if k != "wall_secs"}
             for r in _read_rows(tmp_path / "seq" / "results.csv")}
        b = {r["run_key"]: {k: v for k, v in r.items() if k != "wall_secs"}
             for r in _read_rows(tmp_path / "par" / "results.csv")}
        assert a == b


class TestAggregate:
    def _write(self, path, rows):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
            w.writeheader()
            for r in rows:
                w.writerow(r)

    def _row(self, key, success, solved="", spars="0.1", status="ok",
             kind="nru", label="U[1,2)"):
        return {
            "run_key": key, "kind": kind, "range_label": label, "seed": "0",
            "success": success, "solved_at_iter": solved,
            "sparsity_error": spars, "best_val_loss": "0.0",
            "extrap_mse": "1e-07", "wall_secs": "1.0", "status": status,
        }

    def test_full_success_wilson(self, tmp_path):
        path = tmp_path / "r.csv"
        self._write(path, [self._row(f"k{i}", "true", solved="1000")
                           for i in range(25)])
        g = aggregate(path).group("nru", "U[1,2)")
        assert g.success_rate == 1.0
        assert g.success_ci[0] == pytest.approx(0.8668, abs=5e-4)
        assert g.success_ci[1] == 1.0

    def test_convergence_over_solved_subset_only(self, tmp_path):
        path = tmp_path / "r.csv"
        rows = [self._row("a", "true", solved="1000"),
                self._row("b", "true", solved="3000"),
                self._row("c", "false")]
        self._write(path, rows)
        g = aggregate(path).group("nru", "U[1,2)")
        assert g.solved_median == 2000.0
        assert g.n_success == 2 and g.seeds == 3

    def test_crashed_runs_count_as_failures(self, tmp_path):
        path = tmp_path / "r.csv"
        self._write(path, [self._row("a", "true", solved="1000"),
                           self._row("b", "false", status="failed_nonfinite")])
        g = aggregate(path).group("nru", "U[1,2)")
        assert g.success_rate == 0.5
        assert g.n_failed == 1

    def test_duplicate_keys_later_wins(self, tmp_path, capsys):
        path = tmp_path / "r.csv"
        self._write(path, [self._row("a", "false"),
                           self._row("a", "true", solved="500")])
        g = aggregate(path).group("nru", "U[1,2)")
        assert g.n_success == 1
        assert "duplicate run key" in capsys.readouterr().err

    def test_malformed_rows_reported_with_line_numbers(self, tmp_path):
        path = tmp_path / "r.csv"
        rows = [self._row("a", "true", solved="1000"),
                self._row("b", "true", spars="not-a-number")]
        self._write(path, rows)
        with pytest.raises(ValueError, match="line 3"):
            aggregate(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("foo,bar\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            aggregate(path)

    def test_summary_csv_roundtrip(self, tmp_path):
        path = tmp_path / "r.csv"
        self._write(path, [self._row(f"k{i}", "true", solved="1000")
                           for i in range(5)])
        out = tmp_path / "s.csv"
        write_summary_csv(aggregate(path), out)
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("kind,range_label,seeds")
        assert len(lines) == 2
