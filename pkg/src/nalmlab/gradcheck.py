"""Central-finite-difference verification of the analytic backward passes.

The oracle perturbs every parameter entry and every input entry of the
scalar probe phi(theta) = sum(grad_y * forward(theta)) and compares against
`backward`. Sampling stays inside safe regions: |x| in [0.3, 5], and weights
away from the spots where a 1e-4 step straddles genuine non-smoothness (the
tanh transition of the NRU family near w = 0 and the rounding boundary of
the separate-sign variant at |w| = 0.5). Near-zero NRU weights are covered
exactly by the closed-form cross-check instead.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import backward, forward, nru_weight_grad_closed_form
from .kinds import ModuleKind
from .params import ModuleParams, init_params

FD_STEP = 1e-4
REL_TOL = 1e-4


def _phi(params: ModuleParams, x, gy) -> float:
    y, _ = forward(params, x, mode="training")
    return float(np.sum(gy * y))


def fd_param_grads(params: ModuleParams, x, gy, step=FD_STEP):
    """Central differences of phi w.r.t. every learnable entry."""
    outs = []
    for arr in params.learnable_arrays():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            hi = _phi(params, x, gy)
            flat[idx] = orig - step
            lo = _phi(params, x, gy)
            flat[idx] = orig
            gflat[idx] = (hi - lo) / (2 * step)
        outs.append(g)
    return outs


def fd_input_grads(params: ModuleParams, x, gy, step=FD_STEP):
    g = np.zeros_like(x)
    for n in range(x.shape[0]):
        for i in range(x.shape[1]):
            orig = x[n, i]
            x[n, i] = orig + step
            hi = _phi(params, x, gy)
            x[n, i] = orig - step
            lo = _phi(params, x, gy)
            x[n, i] = orig
            g[n, i] = (hi - lo) / (2 * step)
    return g


def max_rel_err(analytic, numeric) -> float:
    a = np.asarray(analytic, dtype=np.float64)
    f = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(f)), 1e-6)
    return float(np.max(np.abs(a - f) / denom))


def _signed_uniform(rng, lo, hi, size):
    mag = rng.uniform(lo, hi, size=size)
    return mag * rng.choice([-1.0, 1.0], size=size)


def sample_safe_config(kind: ModuleKind, rng: np.random.Generator):
    """Random (params, x, grad_y) in the documented safe regions."""
    i_size = int(rng.integers(2, 5))
    o_size = int(rng.integers(1, 3))
    n = int(rng.integers(1, 4))
    params = init_params(kind, i_size, o_size, int(rng.integers(0, 2**31)))
    rows = params.w_re.shape[0]

    if kind in (ModuleKind.NAU,):
        w = rng.uniform(-1.0, 1.0, size=(rows, o_size))
    elif kind in (ModuleKind.NMU, ModuleKind.NMRU):
        w = rng.uniform(0.05, 0.95, size=(rows, o_size))
    elif kind is ModuleKind.NRU:
        w = _signed_uniform(rng, 0.1, 0.9, (rows, o_size))
    elif kind is ModuleKind.NRU_SEP_SIGN:
        mag = np.where(rng.random((rows, o_size)) < 0.5,
                       rng.uniform(0.1, 0.45, (rows, o_size)),
                       rng.uniform(0.55, 0.9, (rows, o_size)))
        w = mag * rng.choice([-1.0, 1.0], size=(rows, o_size))
    else:  # Real NPU / NPU
        w = rng.uniform(-1.0, 1.0, size=(rows, o_size))
    params = replace(params, w_re=w)
    if params.w_im is not None:
        params = replace(params, w_im=rng.uniform(-1.0, 1.0, size=(rows, o_size)))
    if params.g is not None:
        params = replace(params, g=rng.uniform(0.1, 0.9, size=params.g.shape))

    x = _signed_uniform(rng, 0.3, 5.0, (n, i_size))
    gy = rng.standard_normal((n, o_size))
    return params, x, gy


@dataclass
class GradCheckResult:
    kind: ModuleKind
    trials: int
    max_rel_err: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err < REL_TOL


def check_kind(kind: ModuleKind, trials: int = 100, seed: int = 0) -> GradCheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        params, x, gy = sample_safe_config(kind, rng)
        y, cache = forward(params, x, mode="training")
        grads, gx = backward(params, cache, gy)
        fd_params = fd_param_grads(params, x, gy)
        for a, f in zip(grads.arrays(), fd_params):
            worst = max(worst, max_rel_err(a, f))
        worst = max(worst, max_rel_err(gx, fd_input_grads(params, x, gy)))
    return GradCheckResult(kind, trials, worst)


def check_all(trials: int = 100, seed: int = 0) -> list[GradCheckResult]:
    return [check_kind(kind, trials, seed) for kind in ModuleKind]


def nru_closed_form_max_diff(trials: int = 100, seed: int = 0) -> float:
    """Compare the NRU backward weight gradients against the closed form.

    Weights sampled over the full [-1, 1] including the near-zero transition;
    both sides are analytic so the comparison is exact to rounding.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        i_size = int(rng.integers(1, 5))
        w = rng.uniform(-1.0, 1.0, size=(i_size, 1))
        params = ModuleParams(ModuleKind.NRU, w)
        x = _signed_uniform(rng, 0.3, 5.0, (1, i_size))
        gy = np.ones((1, 1))
        y, cache = forward(params, x, mode="training")
        grads, _ = backward(params, cache, gy)
        f = cache.payload[1][0, :, 0]
        for i in range(i_size):
            rest = float(np.prod(np.delete(f, i)))
            closed = nru_weight_grad_closed_form(float(w[i, 0]), float(x[0, i]), rest)
            worst = max(worst, abs(closed - float(grads.w_re[i, 0])))
    return worst
