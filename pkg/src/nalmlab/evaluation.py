"""Success thresholds, the three run metrics, confidence intervals, and the
state-machine sign oracle used to validate the forward passes."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import forward
from .kinds import ModuleKind
from .params import ModuleParams, golden_params

FLOAT32_EPS = float(np.finfo(np.float32).eps)
FIXED_THRESHOLD = 1e-5
Z95 = 1.959963984540054


def sparsity_error(params: ModuleParams) -> float:
    """max over learnable entries of min(|w|, 1 - |w|)."""
    worst = 0.0
    for arr in params.learnable_arrays():
        a = np.abs(arr)
        worst = max(worst, float(np.max(np.minimum(a, 1.0 - a))))
    return worst


@dataclass(frozen=True)
class Threshold:
    value: float
    source: str  # "fixed_1e-5" or "golden_plus_eps"

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("threshold must be positive")


def golden_mse_float32(kind: ModuleKind, task, test_x: np.ndarray,
                       eps: Optional[float] = None) -> float:
    """MSE of the golden solution on a test set, run in single precision.

    The inputs are cast to float32, the target recomputed from the cast
    inputs, and the forward pass executed in float32, mirroring a
    single-precision pipeline; the squared errors are averaged in float64.
    """
    params = golden_params(kind, task)
    if eps is not None:
        params = replace(params, eps=eps)
    x32 = test_x.astype(np.float32)
    y32 = task.target(x32.astype(np.float64).astype(np.float32))
    pred, _ = forward(params, x32, mode="eval", dtype=np.float32)
    diff = pred[:, 0].astype(np.float64) - y32.astype(np.float64)
    return float(np.mean(diff * diff))


def compute_threshold(task, kind: ModuleKind, mode: str, test_x: np.ndarray,
                      eps: Optional[float] = None) -> Threshold:
    """fixed_1e-5 returns the constant; golden_plus_eps evaluates the golden
    solution's single-precision MSE on the given test set and adds the
    float32 machine epsilon."""
    if mode in ("fixed", "fixed_1e-5"):
        return Threshold(FIXED_THRESHOLD, "fixed_1e-5")
    if mode in ("golden", "golden_plus_eps"):
        mse = golden_mse_float32(kind, task, test_x, eps=eps)
        return Threshold(mse + FLOAT32_EPS, "golden_plus_eps")
    raise ValueError(f"unknown threshold mode {mode!r}")


def wilson_interval(successes: int, n: int, z: float = Z95):
    if n < 1:
        raise ValueError("need at least one trial")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


def _parametric_bootstrap_mean_ci(draw, n: int, rng: np.random.Generator,
                                  n_boot: int):
    means = draw(rng, (n_boot, n)).mean(axis=1)
    lo, hi = np.percentile(means, [2.5, 97.5])
    return float(lo), float(hi)


def confidence_interval(metric: str, samples: Sequence[float], *,
                        rng_seed: int = 0, n_boot: int = 10000):
    """95% two-sided interval for the metric's mean.

    success_rate: Wilson score over pass/fail samples. convergence /
    sparsity: a Gamma / Beta distribution is moment-matched to the samples
    and the interval taken from a parametric bootstrap of the mean.
    """
    vals = np.asarray(list(samples), dtype=np.float64)
    if vals.size < 1:
        raise ValueError("need at least one sample")

    if metric == "success_rate":
        return wilson_interval(int(np.sum(vals > 0.5)), vals.size)

    if metric not in ("convergence", "sparsity"):
        raise ValueError(f"unknown metric {metric!r}")
    if np.all(vals == vals[0]):
        return float(vals[0]), float(vals[0])
    if vals.size < 2:
        raise ValueError(f"{metric} interval needs >= 2 samples")

    mean = float(np.mean(vals))
    var = float(np.var(vals, ddof=1))
    rng = np.random.default_rng(rng_seed)
    n = vals.size

    if metric == "convergence":
        # Gamma fit: shape k = mu^2 / var, scale = var / mu.
        if mean <= 0 or var <= 0:
            return float(np.min(vals)), float(np.max(vals))
        shape = mean * mean / var
        scale = var / mean
        return _parametric_bootstrap_mean_ci(
            lambda r, size: r.gamma(shape, scale, size=size), n, rng, n_boot
        )

    # Beta fit over [0, 1]; sparsity errors live in [0, 0.5].
    nu = mean * (1.0 - mean) / var - 1.0
    if not (0.0 < mean < 1.0) or nu <= 0:
        # Moment fit infeasible: fall back to a nonparametric bootstrap.
        idx = rng.integers(0, n, size=(n_boot, n))
        means = vals[idx].mean(axis=1)
        lo, hi = np.percentile(means, [2.5, 97.5])
        return float(lo), float(hi)
    a, b = mean * nu, (1.0 - mean) * nu
    return _parametric_bootstrap_mean_ci(
        lambda r, size: r.beta(a, b, size=size), n, rng, n_boot
    )


def sign_oracle(kind: ModuleKind, weights, input_signs, gates=None) -> int:
    """State-machine prediction of the output sign for discrete parameters.

    Starts at +1 and walks the inputs; the Real NPU flips on a negative,
    selected (w != 0) and gated (g == 1) input, the NMRU flips on a negative
    input with w == 1. For the NMRU, `weights` and `input_signs` cover the
    augmented (2I) input.
    """
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    s = np.asarray(input_signs, dtype=np.float64).reshape(-1)
    if w.shape != s.shape:
        raise ValueError("weights and input_signs must align")
    if not np.all(np.isin(s, (-1.0, 1.0))):
        raise ValueError("input signs must be -1 or +1")

    state = 1
    if kind in (ModuleKind.REAL_NPU, ModuleKind.NPU):
        if gates is None:
            raise ValueError("the Real NPU oracle needs gate values")
        g = np.asarray(gates, dtype=np.float64).reshape(-1)
        if not np.all(np.isin(w, (-1.0, 0.0, 1.0))):
            raise ValueError("weights must be in {-1, 0, 1}")
        if not np.all(np.isin(g, (0.0, 1.0))):
            raise ValueError("gates must be in {0, 1}")
        for wi, si, gi in zip(w, s, g):
            if si < 0 and wi != 0 and gi == 1:
                state = -state
        return state
    if kind is ModuleKind.NMRU:
        if not np.all(np.isin(w, (0.0, 1.0))):
            raise ValueError("weights must be in {0, 1}")
        for wi, si in zip(w, s):
            if si < 0 and wi == 1:
                state = -state
        return state
    raise ValueError(f"sign oracle covers RealNPU/NPU and NMRU, not {kind}")
