"""Multi-seed sweep orchestration: model variants, experiment presets,
result CSVs and cross-seed aggregation."""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import RangeSpec, TaskSpec
from .evaluation import confidence_interval
from .kinds import ModuleKind
from .schedules import RegSchedule
from .train import TrainConfig, train_run

RESULT_COLUMNS = (
    "run_key", "kind", "range_label", "seed", "success", "solved_at_iter",
    "sparsity_error", "best_val_loss", "extrap_mse", "wall_secs", "status",
)

SUMMARY_COLUMNS = (
    "kind", "range_label", "seeds", "n_success", "success_rate",
    "success_ci_low", "success_ci_high", "solved_median", "solved_ci_low",
    "solved_ci_high", "sparsity_median", "sparsity_ci_low",
    "sparsity_ci_high", "n_failed",
)


# ---------------------------------------------------------------------------
# Model variants: a module kind plus its training recipe.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Variant:
    name: str
    kind: ModuleKind
    lr_no_redundancy: float
    lr_redundancy: float
    use_l1: bool = False
    l1_include_imag: bool = False
    disc_lam_hat: Optional[float] = None
    clip_after_step: bool = True
    constrained_init: bool = False
    grad_norm_clip: Optional[float] = None
    nmru_use_sign: bool = True
    nmru_gate: bool = False


def _v(name, kind, lr2, lr10, **kw) -> Variant:
    return Variant(name, kind, lr2, lr10, **kw)


VARIANTS = {
    v.name: v
    for v in (
        _v("realnpu_baseline", ModuleKind.REAL_NPU, 5e-3, 5e-3, use_l1=True,
           clip_after_step=False),
        _v("realnpu", ModuleKind.REAL_NPU, 5e-3, 5e-3, use_l1=True,
           disc_lam_hat=1.0, constrained_init=True),
        _v("npu", ModuleKind.NPU, 5e-3, 5e-3, use_l1=True, disc_lam_hat=1.0,
           constrained_init=True),
        _v("npu_clipreg", ModuleKind.NPU, 5e-3, 5e-3, use_l1=True,
           l1_include_imag=True, disc_lam_hat=1.0, constrained_init=True),
        _v("nru", ModuleKind.NRU, 1.0, 1e-3, disc_lam_hat=10.0),
        _v("nru_sep", ModuleKind.NRU_SEP_SIGN, 1.0, 1e-3, disc_lam_hat=10.0),
        _v("nmru", ModuleKind.NMRU, 1e-2, 1e-2, disc_lam_hat=10.0,
           grad_norm_clip=1.0),
        _v("nmru_nosign", ModuleKind.NMRU, 1e-2, 1e-2, disc_lam_hat=10.0,
           grad_norm_clip=1.0, nmru_use_sign=False),
        _v("nmru_nogradclip", ModuleKind.NMRU, 1e-2, 1e-2, disc_lam_hat=10.0),
        _v("nmru_vanilla", ModuleKind.NMRU, 1e-2, 1e-2, disc_lam_hat=10.0,
           nmru_use_sign=False),
        _v("nmru_gated", ModuleKind.NMRU, 1e-2, 1e-2, disc_lam_hat=10.0,
           grad_norm_clip=1.0, nmru_gate=True),
        _v("nmu", ModuleKind.NMU, 1e-2, 1e-2, disc_lam_hat=10.0),
        _v("nau", ModuleKind.NAU, 1e-2, 1e-2, disc_lam_hat=10.0),
    )
}

L1_BETA = dict(beta_start=1e-9, beta_end=1e-7, growth=10.0, step=10000)


def _disc_window(variant: Variant, setting: str):
    if setting == "redundancy":
        return 50000, 75000
    if variant.kind in (ModuleKind.REAL_NPU, ModuleKind.NPU):
        return 40000, 50000
    return 20000, 35000


def make_train_config(variant: Variant, setting: str, task: TaskSpec,
                      seed: int, overrides: Optional[dict] = None) -> TrainConfig:
    """Assemble the full TrainConfig for one (variant, task, seed)."""
    overrides = dict(overrides or {})
    if setting not in ("no_redundancy", "redundancy"):
        raise ValueError(f"unknown setting {setting!r}")
    lr = (variant.lr_redundancy if setting == "redundancy"
          else variant.lr_no_redundancy)
    iterations = 100000 if setting == "redundancy" else 50000
    no_reg = bool(overrides.pop("no_reg", False))
    reg = []
    if not no_reg:
        if variant.use_l1:
            reg.append(RegSchedule.l1(
                L1_BETA["beta_start"], L1_BETA["beta_end"],
                growth=L1_BETA["growth"], step=L1_BETA["step"],
                include_imag=variant.l1_include_imag,
            ))
        if variant.disc_lam_hat is not None:
            lo, hi = _disc_window(variant, setting)
            reg.append(RegSchedule.discretization(variant.disc_lam_hat, lo, hi))
    cfg = dict(
        kind=variant.kind,
        task=task,
        iterations=iterations,
        learning_rate=lr,
        batch_size=128,
        optimizer="adam",
        loss="mse",
        reg=tuple(reg),
        grad_norm_clip=variant.grad_norm_clip,
        eval_every=1000,
        seed=seed,
        clip_after_step=variant.clip_after_step,
        constrained_init=variant.constrained_init,
        nmru_use_sign=variant.nmru_use_sign,
        nmru_gate=variant.nmru_gate,
        threshold_mode="fixed",
    )
    cfg.update(overrides)
    return TrainConfig(**cfg)


# ---------------------------------------------------------------------------
# Range catalogues and experiment presets.
# ---------------------------------------------------------------------------

def _u(a, b):
    return RangeSpec.uniform(a, b)


RANGES_MAIN = {
    "U[-20,-10)": (_u(-20, -10), _u(-40, -20)),
    "U[-2,-1)": (_u(-2, -1), _u(-6, -2)),
    "U[-1.2,-1.1)": (_u(-1.2, -1.1), _u(-6.1, -1.2)),
    "U[-0.2,-0.1)": (_u(-0.2, -0.1), _u(-2, -0.2)),
    "U[-2,2)": (_u(-2, 2), RangeSpec.union([(-6, -2), (2, 6)])),
    "U[0.1,0.2)": (_u(0.1, 0.2), _u(0.2, 2)),
    "U[1,2)": (_u(1, 2), _u(2, 6)),
    "U[1.1,1.2)": (_u(1.1, 1.2), _u(1.2, 6)),
    "U[10,20)": (_u(10, 20), _u(20, 40)),
}

RANGES_DISTRIBUTIONS = {
    "TN(-1,3)[-5,10)": (RangeSpec.truncnormal(-1, 3, -5, 10),
                        RangeSpec.truncnormal(-10, 3, -15, -5)),
    "TN(0,1)[-5,5)": (RangeSpec.truncnormal(0, 1, -5, 5),
                      RangeSpec.truncnormal(10, 1, 5, 15)),
    "TN(1,3)[-10,5)": (RangeSpec.truncnormal(1, 3, -10, 5),
                       RangeSpec.truncnormal(10, 3, 5, 15)),
    "B[10,100)": (RangeSpec.benford(10, 100), RangeSpec.benford(100, 1000)),
    "U[-100,100)": (_u(-100, 100), RangeSpec.union([(-200, -100), (100, 200)])),
    "U[-50,50)": (_u(-50, 50), RangeSpec.union([(-100, -50), (50, 100)])),
}

# Mixed-sign datasets: per-element ranges, target is input1 / input2.
MIXED_SIGN_SETS = {
    "ms1": ((_u(-2, -0.1), _u(0.1, 2)), (_u(-6, -2), _u(2, 6))),
    "ms2": ((_u(-2, -1), _u(1, 2)), (_u(-6, -2), _u(2, 6))),
    "ms3": ((_u(-2, 2), _u(-2, 2)), (_u(-6, -2), _u(2, 6))),
    "ms4": ((_u(0.1, 2), _u(-2, -0.1)), (_u(2, 6), _u(-6, -2))),
    "ms5": ((_u(1, 2), _u(-2, -1)), (_u(2, 6), _u(-6, -2))),
}

SMALL_VALUE_BOUNDS = (1.0, 1e-1, 1e-2, 1e-3, 1e-4)


def small_value_label(ub: float) -> str:
    return _u(0, ub).label()


@dataclass(frozen=True)
class Preset:
    name: str
    setting: str
    operation: str
    input_size: int
    relevant: tuple
    ranges: dict  # label -> (interp, extrap); entries RangeSpec or per-element tuples
    default_variants: tuple
    overrides: dict = field(default_factory=dict)

    def task_for(self, label: str) -> TaskSpec:
        if label not in self.ranges:
            raise ValueError(
                f"range {label!r} not in preset {self.name}; "
                f"known: {sorted(self.ranges)}"
            )
        interp, extrap = self.ranges[label]
        return TaskSpec.make(self.operation, self.input_size, interp, extrap,
                             relevant_indices=self.relevant)


def _small_ranges():
    return {small_value_label(ub): (_u(0, ub), _u(0, ub))
            for ub in SMALL_VALUE_BOUNDS}


PRESETS = {
    p.name: p
    for p in (
        Preset("no_redundancy", "no_redundancy", "divide", 2, (0, 1),
               RANGES_MAIN, ("realnpu_baseline", "realnpu", "nru", "nmru")),
        Preset("redundancy", "redundancy", "divide", 10, (0, 1),
               RANGES_MAIN, ("realnpu_baseline", "realnpu", "nru", "nmru")),
        Preset("distributions", "no_redundancy", "divide", 2, (0, 1),
               RANGES_DISTRIBUTIONS, ("realnpu", "nru", "nmru")),
        Preset("distributions_redundancy", "redundancy", "divide", 10, (0, 1),
               RANGES_DISTRIBUTIONS, ("realnpu", "nru", "nmru")),
        Preset("mixed_sign", "no_redundancy", "divide", 2, (0, 1),
               MIXED_SIGN_SETS, ("realnpu",)),
        Preset("div_small_reciprocal1", "no_redundancy", "reciprocal", 1, (0,),
               _small_ranges(), ("realnpu", "nru", "nmru"),
               overrides={"iterations": 5000, "no_reg": True,
                          "threshold_mode": "golden"}),
        Preset("div_small_reciprocal2", "no_redundancy", "reciprocal", 2, (0,),
               _small_ranges(), ("realnpu", "nru", "nmru"),
               overrides={"threshold_mode": "golden"}),
        Preset("div_small_divide", "no_redundancy", "divide", 2, (0, 1),
               _small_ranges(), ("realnpu", "nru", "nmru"),
               overrides={"threshold_mode": "golden"}),
        # Full replication of the published table: 9 ranges x 25 seeds per
        # model and setting. Days of CPU; documented, never a test.
        Preset("paper_scale_no_redundancy", "no_redundancy", "divide", 2,
               (0, 1), RANGES_MAIN,
               ("realnpu_baseline", "realnpu", "nru", "nmru")),
        Preset("paper_scale_redundancy", "redundancy", "divide", 10, (0, 1),
               RANGES_MAIN, ("realnpu_baseline", "realnpu", "nru", "nmru")),
    )
}


# ---------------------------------------------------------------------------
# Sweep execution.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    preset: str
    variants: tuple = ()      # empty: preset defaults
    range_labels: tuple = ()  # empty: all preset ranges
    seeds: tuple = ()
    parallelism: int = 0      # 0: one worker per core
    out_dir: str = "."
    overrides: dict = field(default_factory=dict)

    def resolve(self):
        preset = PRESETS[self.preset]
        variants = tuple(self.variants) or preset.default_variants
        labels = tuple(self.range_labels) or tuple(preset.ranges)
        for v in variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}; known: {sorted(VARIANTS)}")
        jobs = []
        for v in variants:
            for label in labels:
                task = preset.task_for(label)
                for seed in self.seeds:
                    jobs.append((v, label, task, int(seed)))
        return preset, jobs


def run_key(variant_name: str, task: TaskSpec, seed: int) -> str:
    blob = json.dumps(
        {"variant": variant_name, "task": task.to_dict(), "seed": seed},
        sort_keys=True,
    )
    return hashlib.sha1(blob.encode()).hexdigest()[:12]


def _row_from_record(key, variant_name, label, seed, record) -> dict:
    return {
        "run_key": key,
        "kind": variant_name,
        "range_label": label,
        "seed": str(seed),
        "success": "true" if record.success else "false",
        "solved_at_iter": "" if record.solved_at_iter is None
                          else str(record.solved_at_iter),
        "sparsity_error": repr(float(record.sparsity_error)),
        "best_val_loss": repr(float(record.best_val_loss)),
        "extrap_mse": repr(float(record.extrapolation_mse_at_best)),
        "wall_secs": repr(round(float(record.wall_secs), 3)),
        "status": record.status,
    }


def _execute(args):
    key, variant_name, label, seed, config = args
    record = train_run(config)
    return _row_from_record(key, variant_name, label, seed, record)


def run_sweep(spec: SweepSpec, log=None):
    """Run every (variant, range, seed) combination, appending one CSV row
    per completed run; already-present run keys are skipped (resume)."""
    preset, jobs = spec.resolve()
    os.makedirs(spec.out_dir, exist_ok=True)
    results_path = os.path.join(spec.out_dir, "results.csv")

    done = set()
    if os.path.exists(results_path):
        with open(results_path, newline="") as fh:
            for row in csv.DictReader(fh):
                done.add(row["run_key"])

    pending = []
    for variant_name, label, task, seed in jobs:
        key = run_key(variant_name, task, seed)
        if key in done:
            continue
        overrides = dict(preset.overrides)
        overrides.update(spec.overrides)
        config = make_train_config(VARIANTS[variant_name], preset.setting,
                                   task, seed, overrides)
        pending.append((key, variant_name, label, seed, config))

    new_file = not os.path.exists(results_path)
    workers = spec.parallelism if spec.parallelism > 0 else (os.cpu_count() or 1)
    with open(results_path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        if new_file:
            writer.writeheader()
            fh.flush()
        if workers <= 1 or len(pending) <= 1:
            for args in pending:
                row = _execute(args)
                writer.writerow(row)
                fh.flush()
                if log:
                    log(row)
        else:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
                for row in ex.map(_execute, pending, chunksize=1):
                    writer.writerow(row)
                    fh.flush()
                    if log:
                        log(row)

    summary = aggregate(results_path)
    write_summary_csv(summary, os.path.join(spec.out_dir, "summary.csv"))
    return summary


# ---------------------------------------------------------------------------
# Aggregation.
# ---------------------------------------------------------------------------

@dataclass
class GroupStats:
    kind: str
    range_label: str
    seeds: int
    n_success: int
    success_rate: float
    success_ci: tuple
    solved_median: Optional[float]
    solved_ci: tuple
    sparsity_median: Optional[float]
    sparsity_ci: tuple
    n_failed: int


@dataclass
class SweepSummary:
    groups: list

    def group(self, kind: str, range_label: str) -> GroupStats:
        for g in self.groups:
            if g.kind == kind and g.range_label == range_label:
                return g
        raise KeyError((kind, range_label))


def aggregate(results_path) -> SweepSummary:
    """Group results by (kind, range) and attach confidence intervals.

    Success rates count crashed runs as failures; convergence statistics
    cover only successful runs; sparsity covers successful runs when any,
    otherwise all completed runs. Duplicate keys: the later row wins.
    """
    rows = {}
    with open(results_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != RESULT_COLUMNS:
            raise ValueError(f"{results_path}: unexpected header {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            missing = [c for c in RESULT_COLUMNS if row.get(c) in (None,)]
            if missing:
                raise ValueError(f"{results_path}: line {lineno}: missing {missing}")
            try:
                float(row["sparsity_error"])
                float(row["extrap_mse"])
                int(row["seed"])
            except ValueError as exc:
                raise ValueError(f"{results_path}: line {lineno}: {exc}") from None
            if row["run_key"] in rows:
                print(f"warning: duplicate run key {row['run_key']} "
                      f"(line {lineno}); later row wins", file=sys.stderr)
            rows[row["run_key"]] = row

    groups = {}
    for row in rows.values():
        groups.setdefault((row["kind"], row["range_label"]), []).append(row)

    stats = []
    for (kind, label), members in sorted(groups.items()):
        n = len(members)
        succ = [m for m in members if m["success"] == "true"]
        n_failed = sum(1 for m in members if m["status"] != "ok")
        rate = len(succ) / n
        s_ci = confidence_interval("success_rate",
                                   [1.0 if m["success"] == "true" else 0.0
                                    for m in members])
        solved = [float(m["solved_at_iter"]) for m in succ
                  if m["solved_at_iter"] != ""]
        if solved:
            solved_median = float(np.median(solved))
            solved_ci = confidence_interval("convergence", solved)
        else:
            solved_median, solved_ci = None, (None, None)
        spars_pool = succ if succ else [m for m in members if m["status"] == "ok"]
        spars = [float(m["sparsity_error"]) for m in spars_pool]
        if spars:
            sp_median = float(np.median(spars))
            sp_ci = confidence_interval("sparsity", spars)
        else:
            sp_median, sp_ci = None, (None, None)
        stats.append(GroupStats(kind, label, n, len(succ), rate, s_ci,
                                solved_median, solved_ci, sp_median, sp_ci,
                                n_failed))
    return SweepSummary(stats)


def write_summary_csv(summary: SweepSummary, path) -> None:
    def fmt(v):
        return "" if v is None else repr(float(v))

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for g in summary.groups:
            writer.writerow([
                g.kind, g.range_label, g.seeds, g.n_success,
                repr(g.success_rate), fmt(g.success_ci[0]), fmt(g.success_ci[1]),
                fmt(g.solved_median), fmt(g.solved_ci[0]), fmt(g.solved_ci[1]),
                fmt(g.sparsity_median), fmt(g.sparsity_ci[0]),
                fmt(g.sparsity_ci[1]), g.n_failed,
            ])


def format_summary_table(summary: SweepSummary) -> str:
    """Plain-text panels mirroring the per-range figure layout."""
    lines = []
    header = (f"{'kind':<18} {'range':<22} {'success':<22} "
              f"{'solved_at':<26} {'sparsity':<26} fail")
    lines.append(header)
    lines.append("-" * len(header))
    for g in summary.groups:
        s = f"{g.n_success}/{g.seeds} [{g.success_ci[0]:.3f},{g.success_ci[1]:.3f}]"
        if g.solved_median is None:
            conv = "-"
        else:
            conv = (f"{g.solved_median:.0f} "
                    f"[{g.solved_ci[0]:.0f},{g.solved_ci[1]:.0f}]")
        if g.sparsity_median is None:
            sp = "-"
        else:
            sp = (f"{g.sparsity_median:.2e} "
                  f"[{g.sparsity_ci[0]:.2e},{g.sparsity_ci[1]:.2e}]")
        lines.append(f"{g.kind:<18} {g.range_label:<22} {s:<22} "
                     f"{conv:<26} {sp:<26} {g.n_failed}")
    return "\n".join(lines)
