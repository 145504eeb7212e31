"""Render metrics panels and 3-D RMSE surfaces from the documented CSVs.

Summary schema (one row per kind x range):
    kind,range_label,seeds,n_success,success_rate,success_ci_low,
    success_ci_high,solved_median,solved_ci_low,solved_ci_high,
    sparsity_median,sparsity_ci_low,sparsity_ci_high,n_failed
Surface schema (row-major dense grid): w1,w2,rmse with 'inf' sentinels.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import LogNorm  # noqa: E402

SUMMARY_COLUMNS = (
    "kind", "range_label", "seeds", "n_success", "success_rate",
    "success_ci_low", "success_ci_high", "solved_median", "solved_ci_low",
    "solved_ci_high", "sparsity_median", "sparsity_ci_low",
    "sparsity_ci_high", "n_failed",
)

SURFACE_COLUMNS = ("w1", "w2", "rmse")

# Cells whose loss is infinite get this reserved color on surfaces.
INFINITY_COLOR = (0.85, 0.0, 0.35, 1.0)

FIGURE_KINDS = ("metrics_panels", "surface3d")


@dataclass(frozen=True)
class FigureJob:
    input_csv: str
    figure_kind: str
    output_path: str

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.figure_kind!r}")


class SchemaError(ValueError):
    """The input CSV does not match the documented schema."""


def _float_or_none(s: str):
    return None if s == "" else float(s)


def read_summary_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != SUMMARY_COLUMNS:
            raise SchemaError(
                f"{path}: expected summary header {','.join(SUMMARY_COLUMNS)}, "
                f"got {reader.fieldnames}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append({
                    "kind": row["kind"],
                    "range_label": row["range_label"],
                    "seeds": int(row["seeds"]),
                    "success_rate": float(row["success_rate"]),
                    "success_ci": (float(row["success_ci_low"]),
                                   float(row["success_ci_high"])),
                    "solved_median": _float_or_none(row["solved_median"]),
                    "solved_ci": (_float_or_none(row["solved_ci_low"]),
                                  _float_or_none(row["solved_ci_high"])),
                    "sparsity_median": _float_or_none(row["sparsity_median"]),
                    "sparsity_ci": (_float_or_none(row["sparsity_ci_low"]),
                                    _float_or_none(row["sparsity_ci_high"])),
                })
            except (KeyError, ValueError) as exc:
                raise SchemaError(f"{path}: line {lineno}: {exc}") from None
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_surface_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != SURFACE_COLUMNS:
            raise SchemaError(
                f"{path}: expected surface header w1,w2,rmse, got {header}"
            )
        w1s, w2s, vals = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise SchemaError(f"{path}: line {lineno}: need 3 columns")
            try:
                w1s.append(float(row[0]))
                w2s.append(float(row[1]))
                vals.append(float(row[2]))  # float('inf') parses the sentinel
            except ValueError as exc:
                raise SchemaError(f"{path}: line {lineno}: {exc}") from None
    w1 = np.unique(w1s)
    w2 = np.unique(w2s)
    if w1.size * w2.size != len(vals):
        raise SchemaError(f"{path}: not a dense {w1.size}x{w2.size} grid")
    grid = np.asarray(vals).reshape(w1.size, w2.size)
    return w1, w2, grid


def _whisker(ax, xpos, value, ci, color):
    lo, hi = ci
    if lo is not None and hi is not None:
        ax.vlines(xpos, lo, hi, color=color, linewidth=1.2, alpha=0.8)


def render_metrics_panels(rows, output_path) -> None:
    """Three aligned panels (success / solved-at / sparsity) per range with
    confidence-interval whiskers, one color per kind."""
    kinds = sorted({r["kind"] for r in rows})
    labels = list(dict.fromkeys(r["range_label"] for r in rows))
    cmap = plt.get_cmap("tab10")
    colors = {k: cmap(i % 10) for i, k in enumerate(kinds)}

    fig, axes = plt.subplots(3, 1, figsize=(max(6, 1.6 * len(labels)), 9),
                             sharex=True)
    ax_s, ax_c, ax_e = axes
    width = 0.8 / max(1, len(kinds))
    for ki, kind in enumerate(kinds):
        offs = (ki - (len(kinds) - 1) / 2) * width
        for li, label in enumerate(labels):
            match = [r for r in rows
                     if r["kind"] == kind and r["range_label"] == label]
            if not match:
                continue
            r = match[0]
            xp = li + offs
            ax_s.plot(xp, r["success_rate"], "o", color=colors[kind],
                      label=kind if li == 0 else None, markersize=5)
            _whisker(ax_s, xp, r["success_rate"], r["success_ci"], colors[kind])
            if r["solved_median"] is not None:
                ax_c.plot(xp, r["solved_median"], "s", color=colors[kind],
                          markersize=5)
                _whisker(ax_c, xp, r["solved_median"], r["solved_ci"],
                         colors[kind])
            if r["sparsity_median"] is not None:
                ax_e.plot(xp, max(r["sparsity_median"], 1e-12), "D",
                          color=colors[kind], markersize=5)
                ci = r["sparsity_ci"]
                if ci[0] is not None:
                    ci = (max(ci[0], 1e-12), max(ci[1], 1e-12))
                _whisker(ax_e, xp, r["sparsity_median"], ci, colors[kind])

    ax_s.set_ylabel("success rate")
    ax_s.set_ylim(-0.05, 1.05)
    ax_s.legend(loc="lower left", fontsize=8)
    ax_c.set_ylabel("solved at iteration")
    ax_e.set_ylabel("sparsity error")
    ax_e.set_yscale("log")
    ax_e.set_xticks(range(len(labels)))
    ax_e.set_xticklabels(labels, rotation=30, ha="right")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(output_path, dpi=120)
    plt.close(fig)


def render_surface3d(w1, w2, grid, output_path) -> None:
    """3-D RMSE surface, log color scale, reserved color for infinite cells."""
    finite = np.isfinite(grid)
    if not np.any(finite):
        raise SchemaError("surface contains no finite cells")
    fmax = float(grid[finite].max())
    positive = grid[finite & (grid > 0)]
    vmin = float(positive.min()) if positive.size else 1e-12
    norm = LogNorm(vmin=max(vmin, 1e-12), vmax=max(fmax, vmin * 10))

    # Geometry stays finite: infinite cells are drawn at the finite ceiling
    # but painted with the sentinel color.
    z = np.where(finite, grid, fmax)
    z = np.maximum(z, norm.vmin)
    w1g, w2g = np.meshgrid(w1, w2, indexing="ij")
    cmap = plt.get_cmap("viridis")
    facevals = norm(np.clip(z, norm.vmin, norm.vmax))
    facecolors = cmap(facevals)
    facecolors[~finite] = INFINITY_COLOR

    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(111, projection="3d")
    ax.plot_surface(w1g, w2g, np.log10(z), facecolors=facecolors,
                    linewidth=0, antialiased=False, shade=False,
                    rstride=max(1, w1.size // 100),
                    cstride=max(1, w2.size // 100))
    ax.set_xlabel("w1")
    ax.set_ylabel("w2")
    ax.set_zlabel("log10 RMSE")
    mappable = plt.cm.ScalarMappable(norm=norm, cmap=cmap)
    cb = fig.colorbar(mappable, ax=ax, shrink=0.6, pad=0.1)
    cb.set_label("RMSE (log scale)")
    if np.any(~finite):
        ax.set_title("infinite cells shown in magenta", fontsize=9)
    fig.savefig(output_path, dpi=120)
    plt.close(fig)


def render(job: FigureJob) -> str:
    """Execute one figure job; returns the output path."""
    if job.figure_kind == "metrics_panels":
        rows = read_summary_csv(job.input_csv)
        render_metrics_panels(rows, job.output_path)
    else:
        w1, w2, grid = read_surface_csv(job.input_csv)
        render_surface3d(w1, w2, grid, job.output_path)
    return job.output_path
