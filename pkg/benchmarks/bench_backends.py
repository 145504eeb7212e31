#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure numpy fallback.

Times the forward+backward pair per module kind (training batch shape) and
one short end-to-end training run per backend.

    python3 benchmarks/bench_backends.py [--reps 2000] [--train-iters 5000]
"""

import argparse
import time

import numpy as np

import nalmlab.core as core
from nalmlab._backend import get_backend
from nalmlab.core import backward, forward
from nalmlab.gradcheck import sample_safe_config
from nalmlab.kinds import ModuleKind
from nalmlab.params import init_params
from nalmlab.sweep import PRESETS, VARIANTS, make_train_config
from nalmlab.train import train_run


def bench_kernels(backend, reps: int):
    core._impl = backend
    rng = np.random.default_rng(0)
    out = {}
    for kind in ModuleKind:
        params = init_params(kind, 10, 1, rng_seed=0)
        x = rng.uniform(1.0, 2.0, (128, 10))
        gy = rng.standard_normal((128, 1))
        # warm up
        y, cache = forward(params, x, "training")
        backward(params, cache, gy)
        t0 = time.perf_counter()
        for _ in range(reps):
            y, cache = forward(params, x, "training")
            backward(params, cache, gy)
        out[str(kind)] = (time.perf_counter() - t0) / reps * 1e6
    return out


def bench_train(backend, iters: int):
    core._impl = backend
    task = PRESETS["no_redundancy"].task_for("U[1,2)")
    cfg = make_train_config(VARIANTS["nru"], "no_redundancy", task, 0,
                            {"iterations": iters,
                             "eval_every": max(1000, iters // 5),
                             "val_size": 2000, "test_size": 2000})
    t0 = time.perf_counter()
    train_run(cfg)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--train-iters", type=int, default=5000)
    args = ap.parse_args()

    pure = get_backend("pure")
    try:
        compiled = get_backend("compiled")
    except ImportError:
        compiled = None
        print("compiled extension not built; showing pure backend only\n")

    cols = ["pure"] + (["compiled", "speedup"] if compiled else [])
    print(f"forward+backward, batch 128 x 10 inputs, {args.reps} reps "
          f"(microseconds per pair)")
    print(f"{'kind':<10}" + "".join(f"{c:>12}" for c in cols))
    t_pure = bench_kernels(pure, args.reps)
    t_comp = bench_kernels(compiled, args.reps) if compiled else {}
    for kind in t_pure:
        row = f"{kind:<10}{t_pure[kind]:>12.1f}"
        if compiled:
            row += f"{t_comp[kind]:>12.1f}{t_pure[kind] / t_comp[kind]:>11.1f}x"
        print(row)

    print(f"\nNRU training run, {args.train_iters} iterations (seconds)")
    sec_pure = bench_train(pure, args.train_iters)
    line = f"{'train':<10}{sec_pure:>12.2f}"
    if compiled:
        sec_comp = bench_train(compiled, args.train_iters)
        line += f"{sec_comp:>12.2f}{sec_pure / sec_comp:>11.1f}x"
    print(line)


if __name__ == "__main__":
    main()
