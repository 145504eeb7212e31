"""Forward / backward passes for all module kinds, plus the NRU closed form.

The heavy lifting happens in a kernel backend (Cython when built, numpy
otherwise); this module owns validation, the augmented NMRU input, the
forward cache, and dispatch. Float32 evaluation (used only for golden
threshold studies) always routes to the numpy kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _pure
from ._backend import impl as _impl
from .kinds import TANH_SCALE, ModuleKind
from .params import ModuleParams, ParamGrads


@dataclass
class ForwardCache:
    """Everything backward needs, captured by forward."""

    kind: ModuleKind
    x: np.ndarray
    training: bool
    n: int
    out_size: int
    payload: tuple
    aug: Optional[np.ndarray] = None


def _as_batch(x, in_size, dtype):
    x = np.asarray(x, dtype=dtype)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != in_size:
        raise ValueError(f"input must be (N, {in_size}), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    return np.ascontiguousarray(x)


def forward(params: ModuleParams, x, mode: str = "training", *, dtype=np.float64):
    """Run one batch through the module; returns (y, cache).

    `mode` only changes the NRU family (tanh approximation of |w| while
    training, exact absolute in eval). dtype=float32 emulates single
    precision and uses the numpy kernels.
    """
    if mode not in ("training", "eval"):
        raise ValueError(f"mode must be 'training' or 'eval', got {mode!r}")
    training = mode == "training"
    dtype = np.dtype(dtype)
    kern = _impl if dtype == np.float64 else _pure

    x = _as_batch(x, params.in_size, dtype)
    kind = params.kind
    w = np.ascontiguousarray(params.w_re, dtype=dtype)
    eps = dtype.type(params.eps)

    if kind is ModuleKind.NAU:
        y = kern.nau_forward(x, w)
        payload = (w,)
    elif kind is ModuleKind.NMU:
        y, f = kern.nmu_forward(x, w)
        payload = (w, f)
    elif kind is ModuleKind.NRU:
        y, f, p, a, da = kern.nru_forward(x, w, training)
        payload = (w, f, p, a, da)
    elif kind is ModuleKind.NRU_SEP_SIGN:
        y, fm, p, a, da, sgn = kern.nru_sep_forward(x, w, training)
        payload = (w, fm, p, a, da, sgn)
    elif kind is ModuleKind.REAL_NPU:
        g = np.ascontiguousarray(params.g, dtype=dtype)
        y, gc, gmask, r, logr, k, e, ck, sk = kern.realnpu_forward(x, w, g, eps)
        payload = (w, g, gc, gmask, r, logr, k, e, ck, sk)
    elif kind is ModuleKind.NPU:
        g = np.ascontiguousarray(params.g, dtype=dtype)
        w_im = np.ascontiguousarray(params.w_im, dtype=dtype)
        y, gc, gmask, r, logr, k, e, ck, sk = kern.npu_forward(x, w, w_im, g, eps)
        payload = (w, w_im, g, gc, gmask, r, logr, k, e, ck, sk)
    elif kind is ModuleKind.NMRU:
        with np.errstate(divide="ignore", over="ignore"):
            recip = 1.0 / (x + eps)
        aug = np.concatenate([x, recip], axis=1)
        if not np.all(np.isfinite(aug)):
            raise ValueError("non-finite augmented input (x == -eps?)")
        g = None if params.g is None else np.ascontiguousarray(params.g, dtype=dtype)
        y, z, gc, gmask, m, f, mag, k, ck, sk = kern.nmru_forward(
            aug, w, g, params.nmru_use_sign
        )
        payload = (w, g, z, gc, gmask, m, f, mag, k, ck, sk)
        cache = ForwardCache(kind, x, training, x.shape[0], w.shape[1], payload, aug=aug)
        return y, cache
    else:
        raise ValueError(f"unhandled kind {kind}")

    cache = ForwardCache(kind, x, training, x.shape[0], w.shape[1], payload)
    return y, cache


def backward(params: ModuleParams, cache: ForwardCache, grad_y):
    """Exact analytic gradients of the forward rule as implemented.

    Returns (ParamGrads, grad_x), both summed over the batch dimension
    (grad_x keeps its (N, I) shape).
    """
    if cache.kind is not params.kind:
        raise ValueError("cache was produced by a different module kind")
    gy = np.asarray(grad_y, dtype=cache.x.dtype)
    if gy.ndim == 1:
        gy = gy[:, None]
    if gy.shape != (cache.n, cache.out_size):
        raise ValueError(
            f"grad_y must be ({cache.n}, {cache.out_size}), got {gy.shape}"
        )
    gy = np.ascontiguousarray(gy)
    kern = _impl if cache.x.dtype == np.float64 else _pure
    kind = cache.kind
    x = cache.x

    if kind is ModuleKind.NAU:
        (w,) = cache.payload
        gw, gx = kern.nau_backward(x, w, gy)
        return ParamGrads(w_re=gw), gx
    if kind is ModuleKind.NMU:
        w, f = cache.payload
        gw, gx = kern.nmu_backward(x, w, f, gy)
        return ParamGrads(w_re=gw), gx
    if kind is ModuleKind.NRU:
        w, f, p, a, da = cache.payload
        gw, gx = kern.nru_backward(x, w, f, p, a, da, gy)
        return ParamGrads(w_re=gw), gx
    if kind is ModuleKind.NRU_SEP_SIGN:
        w, fm, p, a, da, sgn = cache.payload
        gw, gx = kern.nru_sep_backward(x, w, fm, p, a, da, sgn, gy)
        return ParamGrads(w_re=gw), gx
    if kind is ModuleKind.REAL_NPU:
        w, g, gc, gmask, r, logr, k, e, ck, sk = cache.payload
        gw, gg, gx = kern.realnpu_backward(
            x, w, g, cache.x.dtype.type(params.eps), gc, gmask, r, logr, k, e, ck, sk, gy
        )
        return ParamGrads(w_re=gw, g=gg), gx
    if kind is ModuleKind.NPU:
        w, w_im, g, gc, gmask, r, logr, k, e, ck, sk = cache.payload
        gw_re, gw_im, gg, gx = kern.npu_backward(
            x, w, w_im, g, cache.x.dtype.type(params.eps),
            gc, gmask, r, logr, k, e, ck, sk, gy,
        )
        return ParamGrads(w_re=gw_re, w_im=gw_im, g=gg), gx
    if kind is ModuleKind.NMRU:
        w, g, z, gc, gmask, m, f, mag, k, ck, sk = cache.payload
        gw, gg, gaug = kern.nmru_backward(
            cache.aug, w, g, z, gc, gmask, m, f, mag, k, ck, sk, gy
        )
        i_size = params.in_size
        eps = cache.x.dtype.type(params.eps)
        gx = gaug[:, :i_size] - gaug[:, i_size:] / (x + eps) ** 2
        return ParamGrads(w_re=gw, g=gg), gx
    raise ValueError(f"unhandled kind {kind}")


def nru_weight_grad_closed_form(w_i: float, x_i: float, rest_factor: float) -> float:
    """Training-mode NRU weight gradient for one factor, in closed form.

    The product of the remaining factors is supplied as `rest_factor`.
    Used only to cross-check `backward`. Requires x_i != 0.
    """
    s = TANH_SCALE
    t = math.tanh(s * w_i)
    sech2 = 1.0 - t * t
    m = abs(x_i)
    sgn = math.copysign(1.0, x_i) if x_i != 0 else 0.0
    pw = m ** w_i
    core = sgn * pw * (t * math.log(m) + 2.0 * s * sech2) - 2.0 * s * sech2
    return t * core * rest_factor
