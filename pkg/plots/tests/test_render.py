"""Rendering from synthesized CSVs matching the documented schemas."""

import math

import numpy as np
import pytest

from nalmplots import FigureJob, render
from nalmplots.cli import main
from nalmplots.figures import SchemaError, read_summary_csv, read_surface_csv

SUMMARY_HEADER = ("kind,range_label,seeds,n_success,success_rate,"
                  "success_ci_low,success_ci_high,solved_median,"
                  "solved_ci_low,solved_ci_high,sparsity_median,"
                  "sparsity_ci_low,sparsity_ci_high,n_failed")


def _summary_csv(path, ranges=("U[1,2)", "U[10,20)", "U[-2,-1)")):
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER.split(","))
        for kind in ("nru", "nmru"):
            for i, label in enumerate(ranges):
                unsolved = kind == "nru" and i == 2
                solved = "" if unsolved else str(3000 + 1000 * i)
                lo = "" if unsolved else str(2500 + 1000 * i)
                hi = "" if unsolved else str(3500 + 1000 * i)
                rate = "0.0" if unsolved else "1.0"
                writer.writerow([kind, label, 5, 0 if unsolved else 5, rate,
                                 "0.5", "1.0", solved, lo, hi,
                                 "0.01", "0.001", "0.05", 0])
    return path


def _surface_csv(path, n=101):
    rows = ["w1,w2,rmse"]
    axis = [-1.0 + 2.0 * i / (n - 1) for i in range(n)]
    for a in axis:
        for b in axis:
            if abs(a) < 0.02 and b < -0.5:
                val = "inf"
            else:
                val = repr(abs(a * b * 13.2 - 13.2))
            rows.append(f"{a!r},{b!r},{val}")
    path.write_text("\n".join(rows) + "\n")
    return path


class TestReaders:
    def test_summary_roundtrip(self, tmp_path):
        rows = read_summary_csv(_summary_csv(tmp_path / "s.csv"))
        assert len(rows) == 6
        assert rows[0]["success_ci"] == (0.5, 1.0)
        unsolved = [r for r in rows if r["solved_median"] is None]
        assert len(unsolved) == 1

    def test_surface_roundtrip(self, tmp_path):
        w1, w2, grid = read_surface_csv(_surface_csv(tmp_path / "g.csv", n=21))
        assert grid.shape == (21, 21)
        assert np.isinf(grid).any()

    def test_summary_schema_mismatch(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("kind,range\nnru,U[1,2)\n")
        with pytest.raises(SchemaError, match="header"):
            read_summary_csv(p)

    def test_surface_schema_mismatch(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(SchemaError):
            read_surface_csv(p)

    def test_sparse_grid_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("w1,w2,rmse\n0.0,0.0,1.0\n0.0,1.0,1.0\n1.0,0.0,1.0\n")
        with pytest.raises(SchemaError, match="dense"):
            read_surface_csv(p)


class TestRender:
    def test_metrics_panels_from_three_range_summary(self, tmp_path):
        csv_path = _summary_csv(tmp_path / "s.csv")
        out = tmp_path / "panels.png"
        render(FigureJob(str(csv_path), "metrics_panels", str(out)))
        assert out.exists() and out.stat().st_size > 1000

    def test_surface_from_101_grid(self, tmp_path):
        csv_path = _surface_csv(tmp_path / "g.csv", n=101)
        out = tmp_path / "surface.png"
        render(FigureJob(str(csv_path), "surface3d", str(out)))
        assert out.exists() and out.stat().st_size > 1000

    def test_rerender_is_byte_stable(self, tmp_path):
        csv_path = _summary_csv(tmp_path / "s.csv")
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        render(FigureJob(str(csv_path), "metrics_panels", str(a)))
        render(FigureJob(str(csv_path), "metrics_panels", str(b)))
        assert a.read_bytes() == b.read_bytes()
        grid_path = _surface_csv(tmp_path / "g.csv", n=41)
        c, d = tmp_path / "c.png", tmp_path / "d.png"
        render(FigureJob(str(grid_path), "surface3d", str(c)))
        render(FigureJob(str(grid_path), "surface3d", str(d)))
        assert c.read_bytes() == d.read_bytes()

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="figure kind"):
            FigureJob("x.csv", "histogram", "y.png")

    def test_inputs_unmodified(self, tmp_path):
        csv_path = _summary_csv(tmp_path / "s.csv")
        before = csv_path.read_bytes()
        render(FigureJob(str(csv_path), "metrics_panels",
                         str(tmp_path / "o.png")))
        assert csv_path.read_bytes() == before


class TestCli:
    def test_metrics_command(self, tmp_path, capsys):
        csv_path = _summary_csv(tmp_path / "s.csv")
        out = tmp_path / "fig.png"
        assert main(["metrics", "--summary", str(csv_path),
                     "--out", str(out)]) == 0
        assert out.exists()

    def test_surface_command(self, tmp_path):
        grid = _surface_csv(tmp_path / "g.csv", n=31)
        out = tmp_path / "fig.png"
        assert main(["surface", "--grid", str(grid), "--out", str(out)]) == 0
        assert out.exists()

    def test_schema_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("nope\n1\n")
        rc = main(["metrics", "--summary", str(bad),
                   "--out", str(tmp_path / "x.png")])
        assert rc == 1
        assert "error" in capsys.readouterr().err
