"""Pure numpy kernels for the arithmetic modules.

This is the reference backend; `nalmlab._speedups` (Cython) implements the
same functions for float64 and is preferred at import time when available.
All kernels are stateless: forward returns the output plus the intermediate
arrays that backward needs, backward is a plain function of those arrays.

Shape conventions: x is (N, I), weights are (I, O), outputs are (N, O).
The NMRU operates on an augmented input of width 2I built by the caller.
"""

from __future__ import annotations

import numpy as np

from .kinds import TANH_SCALE

BACKEND_NAME = "pure"


def _prod_excl(f):
    """R[n, i, o] = product over i' != i of f[n, i', o] (prefix/suffix form).

    Division-free so exact zeros in f are handled exactly.
    """
    pre = np.ones_like(f)
    np.cumprod(f[:, :-1, :], axis=1, out=pre[:, 1:, :])
    suf = np.ones_like(f)
    np.cumprod(f[:, :0:-1, :], axis=1, out=suf[:, -2::-1, :])
    return pre * suf


# ---------------------------------------------------------------------------
# NAU: y_o = sum_i w_io x_i
# ---------------------------------------------------------------------------

def nau_forward(x, w):
    return x @ w


def nau_backward(x, w, gy):
    gw = x.T @ gy
    gx = gy @ w.T
    return gw, gx


# ---------------------------------------------------------------------------
# NMU: y_o = prod_i (w_io x_i + 1 - w_io)
# ---------------------------------------------------------------------------

def nmu_forward(x, w):
    f = w[None, :, :] * x[:, :, None] + (1.0 - w[None, :, :])
    y = np.prod(f, axis=1)
    return y, f


def nmu_backward(x, w, f, gy):
    r = _prod_excl(f)
    gyn = gy[:, None, :]
    gw = np.sum(gyn * (x[:, :, None] - 1.0) * r, axis=0)
    gx = np.sum(gyn * w[None, :, :] * r, axis=2)
    return gw, gx


# ---------------------------------------------------------------------------
# NRU: y_o = prod_i (sign(x_i) |x_i|^{w_io} a(w_io) + 1 - a(w_io))
# with a(w) = tanh(scale*w)^2 while training and a(w) = |w| in eval mode.
# ---------------------------------------------------------------------------

def _nru_abs(w, training):
    if training:
        t = np.tanh(TANH_SCALE * w)
        a = t * t
        da = 2.0 * TANH_SCALE * t * (1.0 - a)
    else:
        a = np.abs(w)
        da = np.sign(w)
    return a, da


def _signed_power(m, w):
    """p[n, i, o] = m[n, i] ** w[i, o].

    numpy's pow already follows the |0|^w convention used here: 0 for w > 0,
    1 for w == 0 and +inf for w < 0; it is also exact at integer exponents.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.power(m[:, :, None], w[None, :, :])


def nru_forward(x, w, training):
    m = np.abs(x)
    s = np.sign(x)
    a, da = _nru_abs(w, training)
    p = _signed_power(m, w)
    with np.errstate(invalid="ignore"):
        f = s[:, :, None] * p * a[None, :, :] + (1.0 - a[None, :, :])
    zero = m == 0.0
    if np.any(zero):
        wz = np.broadcast_to(w[None, :, :], f.shape)
        fix = np.where(wz < 0.0, np.inf, 1.0 - np.broadcast_to(a[None, :, :], f.shape))
        f = np.where(zero[:, :, None], fix, f)
    y = np.prod(f, axis=1)
    return y, f, p, a, da


def nru_backward(x, w, f, p, a, da, gy):
    m = np.abs(x)
    s = np.sign(x)
    safe = m > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        lm = np.where(safe, np.log(m), 0.0)
        inv_m = np.where(safe, 1.0 / np.where(safe, m, 1.0), 0.0)
    sp = s[:, :, None] * p
    dfdw = sp * lm[:, :, None] * a[None, :, :] + (sp - 1.0) * da[None, :, :]
    dfdx = a[None, :, :] * w[None, :, :] * p * inv_m[:, :, None]
    dfdw = np.where(safe[:, :, None], dfdw, 0.0)
    dfdx = np.where(safe[:, :, None], dfdx, 0.0)
    r = _prod_excl(f)
    gyn = gy[:, None, :]
    gw = np.sum(gyn * dfdw * r, axis=0)
    gx = np.sum(gyn * dfdx * r, axis=2)
    return gw, gx


# ---------------------------------------------------------------------------
# NRU with separate sign (Eq.-14 variant):
#   y_o = prod_i (|x_i|^{w_io} a(w_io) + 1 - a(w_io)) * prod_i sign(x_i)^round(w_io)
# ---------------------------------------------------------------------------

def _sep_sign_product(x, w):
    s = np.sign(x)
    rw = np.rint(w)
    with np.errstate(divide="ignore"):
        base = np.where(
            rw[None, :, :] == 0.0,
            1.0,
            np.where(rw[None, :, :] > 0.0, s[:, :, None], 1.0 / s[:, :, None]),
        )
    return np.prod(base, axis=1)


def nru_sep_forward(x, w, training):
    m = np.abs(x)
    a, da = _nru_abs(w, training)
    p = _signed_power(m, w)
    fm = p * a[None, :, :] + (1.0 - a[None, :, :])
    zero = m == 0.0
    if np.any(zero):
        wz = np.broadcast_to(w[None, :, :], fm.shape)
        fix = np.where(wz < 0.0, np.inf, 1.0 - np.broadcast_to(a[None, :, :], fm.shape))
        fm = np.where(zero[:, :, None], fix, fm)
    sgn = _sep_sign_product(x, w)
    y = sgn * np.prod(fm, axis=1)
    return y, fm, p, a, da, sgn


def nru_sep_backward(x, w, fm, p, a, da, sgn, gy):
    m = np.abs(x)
    s = np.sign(x)
    safe = m > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        lm = np.where(safe, np.log(m), 0.0)
        inv_m = np.where(safe, 1.0 / np.where(safe, m, 1.0), 0.0)
    dfdw = p * lm[:, :, None] * a[None, :, :] + (p - 1.0) * da[None, :, :]
    dfdx = a[None, :, :] * w[None, :, :] * p * inv_m[:, :, None] * s[:, :, None]
    dfdw = np.where(safe[:, :, None], dfdw, 0.0)
    dfdx = np.where(safe[:, :, None], dfdx, 0.0)
    r = _prod_excl(fm)
    gs = (gy * sgn)[:, None, :]
    gw = np.sum(gs * dfdw * r, axis=0)
    gx = np.sum(gs * dfdx * r, axis=2)
    return gw, gx


# ---------------------------------------------------------------------------
# Real NPU and NPU. The gate is clamped to [0, 1] inside the forward pass
# (the stored parameter may sit outside when post-step clipping is disabled);
# gradients pass through the clamp only inside the legal range.
# ---------------------------------------------------------------------------

def _npu_common(x, g, eps):
    gc = np.clip(g, 0.0, 1.0)
    gmask = ((g >= 0.0) & (g <= 1.0)).astype(x.dtype)
    absx = np.abs(x)
    r = gc[None, :] * (absx + eps) + (1.0 - gc[None, :])
    with np.errstate(divide="ignore"):
        logr = np.log(r)
    neg = (x < 0.0).astype(x.dtype)
    k = np.pi * gc[None, :] * neg
    return gc, gmask, absx, r, logr, neg, k


def _zero_safe_dot(coef, w):
    """sum_i coef[n, i] * w[i, o] treating w == 0 entries as exact zeros.

    Keeps 0 * log(0) = 0 so golden parameter sets stay finite under eps = 0.
    """
    if np.all(np.isfinite(coef)):
        return coef @ w
    wz = np.where(w == 0.0, 0.0, w)
    term = coef[:, :, None] * wz[None, :, :]
    term = np.where(w[None, :, :] == 0.0, 0.0, term)
    return np.sum(term, axis=1)


def realnpu_forward(x, w, g, eps):
    gc, gmask, absx, r, logr, neg, k = _npu_common(x, g, eps)
    ell = _zero_safe_dot(logr, w)
    kk = k @ w
    with np.errstate(over="ignore"):
        e = np.exp(ell)
    ck = np.cos(kk)
    sk = np.sin(kk)
    y = e * ck
    return y, gc, gmask, r, logr, k, e, ck, sk


def realnpu_backward(x, w, g, eps, gc, gmask, r, logr, k, e, ck, sk, gy):
    absx = np.abs(x)
    sgn = np.sign(x)
    ge = gy * e
    gec = ge * ck
    ges = ge * sk
    gw = logr.T @ gec - k.T @ ges
    dlogr = (absx + eps - 1.0) / r
    neg = (x < 0.0).astype(x.dtype)
    dk = np.pi * neg
    gg = np.sum((gec @ w.T) * dlogr - (ges @ w.T) * dk, axis=0) * gmask
    gx = (gec @ w.T) * (gc[None, :] * sgn / r)
    return gw, gg, gx


def npu_forward(x, w_re, w_im, g, eps):
    gc, gmask, absx, r, logr, neg, k = _npu_common(x, g, eps)
    ell = _zero_safe_dot(logr, w_re) - k @ w_im
    kk = _zero_safe_dot(logr, w_im) + k @ w_re
    with np.errstate(over="ignore"):
        e = np.exp(ell)
    ck = np.cos(kk)
    sk = np.sin(kk)
    y = e * ck
    return y, gc, gmask, r, logr, k, e, ck, sk


def npu_backward(x, w_re, w_im, g, eps, gc, gmask, r, logr, k, e, ck, sk, gy):
    absx = np.abs(x)
    sgn = np.sign(x)
    ge = gy * e
    gec = ge * ck
    ges = ge * sk
    gw_re = logr.T @ gec - k.T @ ges
    gw_im = -(k.T @ gec) - logr.T @ ges
    dlogr = (absx + eps - 1.0) / r
    dk = np.pi * (x < 0.0).astype(x.dtype)
    gg = np.sum(
        (gec @ w_re.T - ges @ w_im.T) * dlogr - (gec @ w_im.T + ges @ w_re.T) * dk,
        axis=0,
    ) * gmask
    gx = (gec @ w_re.T - ges @ w_im.T) * (gc[None, :] * sgn / r)
    return gw_re, gw_im, gg, gx


# ---------------------------------------------------------------------------
# NMRU over the augmented input z (N, 2I), optionally gated, optionally with
# the cosine sign mechanism disabled (ablation).
# ---------------------------------------------------------------------------

def nmru_forward(aug, w, g, use_sign):
    if g is not None:
        gc = np.clip(g, 0.0, 1.0)
        gmask = ((g >= 0.0) & (g <= 1.0)).astype(aug.dtype)
        z = gc[None, :] * aug
    else:
        gc = None
        gmask = None
        z = aug
    m = np.abs(z)
    f = w[None, :, :] * m[:, :, None] + (1.0 - w[None, :, :])
    mag = np.prod(f, axis=1)
    if use_sign:
        k = np.pi * (z < 0.0).astype(aug.dtype)
        kk = k @ w
        ck = np.cos(kk)
        sk = np.sin(kk)
    else:
        k = np.zeros_like(z)
        ck = np.ones_like(mag)
        sk = np.zeros_like(mag)
    y = mag * ck
    return y, z, gc, gmask, m, f, mag, k, ck, sk


def nmru_backward(aug, w, g, z, gc, gmask, m, f, mag, k, ck, sk, gy):
    r = _prod_excl(f)
    gyn = gy[:, None, :]
    ckn = (gy * ck)[:, None, :]
    gw = np.sum(ckn * (m[:, :, None] - 1.0) * r, axis=0) - k.T @ (gy * sk * mag)
    sgn = np.sign(z)
    gz = np.sum(ckn * w[None, :, :] * r, axis=2) * sgn
    if g is not None:
        gg = np.sum(gz * aug, axis=0) * gmask
        gaug = gz * gc[None, :]
    else:
        gg = None
        gaug = gz
    return gw, gg, gaug
