"""Command-line surface: train / sweep / landscape / verify-grad /
thresholds / report.

Every sweep flag has a JSON config-file equivalent (--config); flags given
on the command line override file values. NALMLAB_OUT sets the default
output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import _backend
from .data import build_batch, parse_range_label
from .evaluation import compute_threshold
from .gradcheck import REL_TOL, check_kind, nru_closed_form_max_diff
from .kinds import DEFAULT_EPS, ModuleKind, parse_kind
from .landscape import SurfaceSpec, rmse_surface, write_surface_csv
from .sweep import (PRESETS, SMALL_VALUE_BOUNDS, VARIANTS, SweepSpec,
                    aggregate, format_summary_table, make_train_config,
                    run_sweep, small_value_label)
from .train import train_run, write_trace_csv


def _default_out() -> str:
    return os.environ.get("NALMLAB_OUT", ".")


def _add_train(sub):
    p = sub.add_parser("train", help="run one training configuration")
    p.add_argument("--variant", default="nru", choices=sorted(VARIANTS))
    p.add_argument("--preset", default="no_redundancy", choices=sorted(PRESETS))
    p.add_argument("--range", dest="range_label", default="U[1,2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--eval-every", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--loss", default=None, choices=("mse", "pcc", "mape"))
    p.add_argument("--val-size", type=int, default=None)
    p.add_argument("--test-size", type=int, default=None)
    p.add_argument("--out", default=None, help="directory for trace/record files")


def _add_sweep(sub):
    p = sub.add_parser("sweep", help="run a multi-seed sweep")
    p.add_argument("--config", default=None, help="JSON file with sweep settings")
    p.add_argument("--preset", default=None, choices=sorted(PRESETS))
    p.add_argument("--kinds", default=None,
                   help="comma-separated variants (e.g. nru,nmru)")
    p.add_argument("--ranges", default=None,
                   help="comma-separated range labels (e.g. 'U[1,2)')")
    p.add_argument("--seeds", default=None,
                   help="a count (first N seeds) or comma-separated list")
    p.add_argument("--parallel", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--eval-every", type=int, default=None)
    p.add_argument("--val-size", type=int, default=None)
    p.add_argument("--test-size", type=int, default=None)
    p.add_argument("--out", default=None)


def _add_landscape(sub):
    p = sub.add_parser("landscape", help="emit an RMSE surface grid CSV")
    p.add_argument("--kind", default="nru", choices=("realnpu", "nru", "nmru"))
    p.add_argument("--res", type=int, default=401)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--out", default=None, help="output CSV path")


def _add_verify_grad(sub):
    p = sub.add_parser("verify-grad", help="finite-difference gradient suite")
    p.add_argument("--kind", default="all")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)


def _add_thresholds(sub):
    p = sub.add_parser("thresholds",
                       help="golden-solution thresholds for the small-value tasks")
    p.add_argument("--task", default="reciprocal1",
                   choices=("reciprocal1", "reciprocal2", "divide"))
    p.add_argument("--kinds", default="realnpu,nru,nmru")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-size", type=int, default=10000)


def _add_report(sub):
    p = sub.add_parser("report", help="pretty-print a sweep summary")
    p.add_argument("results", help="results.csv from a sweep")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nalmlab",
        description="neural arithmetic division modules: training and analysis "
                    f"(kernel backend: {_backend.BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_train(sub)
    _add_sweep(sub)
    _add_landscape(sub)
    _add_verify_grad(sub)
    _add_thresholds(sub)
    _add_report(sub)
    return parser


def _cmd_train(args) -> int:
    preset = PRESETS[args.preset]
    task = preset.task_for(args.range_label)
    overrides = dict(preset.overrides)
    for name, key in (("iterations", "iterations"), ("eval_every", "eval_every"),
                      ("batch_size", "batch_size"), ("lr", "learning_rate"),
                      ("loss", "loss"), ("val_size", "val_size"),
                      ("test_size", "test_size")):
        v = getattr(args, name)
        if v is not None:
            overrides[key] = v
    config = make_train_config(VARIANTS[args.variant], preset.setting, task,
                               args.seed, overrides)
    record = train_run(config)
    print(record.summary_line())
    out = args.out if args.out is not None else _default_out()
    os.makedirs(out, exist_ok=True)
    stem = f"train_{args.variant}_{args.seed}"
    trace_path = os.path.join(out, stem + "_trace.csv")
    write_trace_csv(record, trace_path)
    meta = {
        "variant": args.variant,
        "preset": args.preset,
        "range": args.range_label,
        "seed": args.seed,
        "status": record.status,
        "success": record.success,
        "best_val_loss": record.best_val_loss,
        "best_iteration": record.best_iteration,
        "extrapolation_mse_at_best": record.extrapolation_mse_at_best,
        "solved_at_iter": record.solved_at_iter,
        "sparsity_error": record.sparsity_error,
        "threshold": record.threshold.value,
        "wall_secs": record.wall_secs,
    }
    with open(os.path.join(out, stem + ".json"), "w") as fh:
        json.dump(meta, fh, indent=2, default=float)
    print(f"trace written to {trace_path}")
    return 0


def _parse_seeds(text: str):
    if "," in text:
        return tuple(int(s) for s in text.split(",") if s.strip() != "")
    return tuple(range(int(text)))


def split_range_list(text: str):
    """Split a comma-separated list of range labels; commas inside brackets
    or parentheses belong to the label (e.g. 'U[1,2),U[10,20)')."""
    parts = []
    depth = 0
    cur = []
    for ch in text:
        if ch in "[(":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur).strip())
    return tuple(p for p in parts if p)


def _cmd_sweep(args) -> int:
    settings = {}
    if args.config:
        with open(args.config) as fh:
            settings = json.load(fh)
    preset = args.preset or settings.get("preset")
    if preset is None:
        print("error: a preset is required (flag --preset or config file)",
              file=sys.stderr)
        return 2
    variants = (tuple(args.kinds.split(",")) if args.kinds
                else tuple(settings.get("kinds", ())))
    ranges = (split_range_list(args.ranges) if args.ranges
              else tuple(settings.get("ranges", ())))
    if args.seeds is not None:
        seeds = _parse_seeds(args.seeds)
    else:
        raw = settings.get("seeds", 25)
        seeds = tuple(raw) if isinstance(raw, list) else tuple(range(int(raw)))
    parallel = args.parallel if args.parallel is not None else int(
        settings.get("parallel", 0)
    )
    out = args.out or settings.get("out") or _default_out()
    overrides = dict(settings.get("overrides", {}))
    for name, key in (("iterations", "iterations"), ("eval_every", "eval_every"),
                      ("val_size", "val_size"), ("test_size", "test_size")):
        v = getattr(args, name)
        if v is not None:
            overrides[key] = v
    spec = SweepSpec(preset=preset, variants=variants, range_labels=ranges,
                     seeds=seeds, parallelism=parallel, out_dir=out,
                     overrides=overrides)
    summary = run_sweep(
        spec,
        log=lambda row: print(
            f"done {row['kind']} {row['range_label']} seed {row['seed']}: "
            f"success={row['success']} status={row['status']}"
        ),
    )
    print(format_summary_table(summary))
    print(f"results in {os.path.join(out, 'results.csv')}")
    return 0


def _cmd_landscape(args) -> int:
    kind = parse_kind(args.kind)
    spec_kw = {"kind": kind, "resolution": args.res}
    if args.eps is not None:
        spec_kw["eps"] = args.eps
    spec = SurfaceSpec(**spec_kw)
    w1, w2, grid = rmse_surface(spec)
    out = args.out or os.path.join(_default_out(), f"surface_{args.kind}.csv")
    write_surface_csv(out, w1, w2, grid)
    finite = grid[np.isfinite(grid)]
    print(f"{args.kind}: {grid.shape[0]}x{grid.shape[1]} grid -> {out}")
    print(f"finite cells: {finite.size}/{grid.size}, "
          f"max finite rmse: {finite.max():.6g}")
    return 0


def _cmd_verify_grad(args) -> int:
    kinds = list(ModuleKind) if args.kind == "all" else [parse_kind(args.kind)]
    ok = True
    for kind in kinds:
        res = check_kind(kind, trials=args.trials, seed=args.seed)
        status = "ok" if res.passed else "FAIL"
        print(f"{str(kind):<10} trials={res.trials:<4} "
              f"max_rel_err={res.max_rel_err:.3e}  [{status}]")
        ok = ok and res.passed
    if ModuleKind.NRU in kinds:
        diff = nru_closed_form_max_diff(trials=args.trials, seed=args.seed)
        status = "ok" if diff < 1e-9 else "FAIL"
        print(f"nru closed-form max_abs_diff={diff:.3e}  [{status}]")
        ok = ok and diff < 1e-9
    print(f"tolerance: rel err < {REL_TOL}")
    return 0 if ok else 1


def _cmd_thresholds(args) -> int:
    from .sweep import PRESETS

    preset = PRESETS[{
        "reciprocal1": "div_small_reciprocal1",
        "reciprocal2": "div_small_reciprocal2",
        "divide": "div_small_divide",
    }[args.task]]
    kinds = [parse_kind(k) for k in args.kinds.split(",")]
    print(f"{'range':<12}" + "".join(f"{str(k):>16}" for k in kinds))
    for ub in SMALL_VALUE_BOUNDS:
        label = small_value_label(ub)
        task = preset.task_for(label)
        rng = np.random.default_rng(np.random.SeedSequence(args.seed))
        test_x, _ = build_batch(task, "test", args.test_size, rng)
        cells = []
        for kind in kinds:
            thr = compute_threshold(task, kind, "golden", test_x, eps=args.eps)
            cells.append(f"{thr.value:>16.6e}")
        print(f"{label:<12}" + "".join(cells))
    return 0


def _cmd_report(args) -> int:
    summary = aggregate(args.results)
    print(format_summary_table(summary))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "train": _cmd_train,
        "sweep": _cmd_sweep,
        "landscape": _cmd_landscape,
        "verify-grad": _cmd_verify_grad,
        "thresholds": _cmd_thresholds,
        "report": _cmd_report,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
