# cython: language_level=3
"""Compiled float64 kernels mirroring nalmlab._pure function for function.

Loop bodies follow the numpy reference exactly (same formulas, same
prefix/suffix product construction) so the two backends agree to rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport (INFINITY, M_PI, cos, exp, fabs, log, pow, rint, sin,
                        sqrt, tanh)

cnp.import_array()

BACKEND_NAME = "compiled"

DEF TANH_SCALE = 1000.0


cdef inline double _sign(double v) nogil:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


# ---------------------------------------------------------------------------
# NAU (plain matrix products; BLAS via numpy is already optimal)
# ---------------------------------------------------------------------------

def nau_forward(x, w):
    return x @ w


def nau_backward(x, w, gy):
    return x.T @ gy, gy @ w.T


# ---------------------------------------------------------------------------
# NMU
# ---------------------------------------------------------------------------

def nmu_forward(double[:, ::1] x, double[:, ::1] w):
    cdef Py_ssize_t n_rows = x.shape[0], n_in = x.shape[1], n_out = w.shape[1]
    y_arr = np.empty((n_rows, n_out))
    f_arr = np.empty((n_rows, n_in, n_out))
    cdef double[:, ::1] y = y_arr
    cdef double[:, :, ::1] f = f_arr
    cdef Py_ssize_t n, i, o
    cdef double prod, fi
    for n in range(n_rows):
        for o in range(n_out):
            prod = 1.0
            for i in range(n_in):
                fi = w[i, o] * x[n, i] + 1.0 - w[i, o]
                f[n, i, o] = fi
                prod *= fi
            y[n, o] = prod
    return y_arr, f_arr


def nmu_backward(double[:, ::1] x, double[:, ::1] w, double[:, :, ::1] f,
                 double[:, ::1] gy):
    cdef Py_ssize_t n_rows = x.shape[0], n_in = x.shape[1], n_out = w.shape[1]
    gw_arr = np.zeros((n_in, n_out))
    gx_arr = np.zeros((n_rows, n_in))
    cdef double[:, ::1] gw = gw_arr
    cdef double[:, ::1] gx = gx_arr
    pre_arr = np.empty(n_in)
    cdef double[::1] pre = pre_arr
    cdef Py_ssize_t n, i, o
    cdef double acc, suf, r, g
    for n in range(n_rows):
        for o in range(n_out):
            g = gy[n, o]
            acc = 1.0
            for i in range(n_in):
                pre[i] = acc
                acc *= f[n, i, o]
            suf = 1.0
            for i in range(n_in - 1, -1, -1):
                r = pre[i] * suf
                gw[i, o] += g * (x[n, i] - 1.0) * r
                gx[n, i] += g * w[i, o] * r
                suf *= f[n, i, o]
    return gw_arr, gx_arr


# ---------------------------------------------------------------------------
# NRU (joint sign) and the separate-sign variant
# ---------------------------------------------------------------------------

cdef void _nru_abs_tables(double[:, ::1] w, bint training,
                          double[:, ::1] a, double[:, ::1] da) nogil:
    cdef Py_ssize_t i, o
    cdef double t
    for i in range(w.shape[0]):
        for o in range(w.shape[1]):
            if training:
                t = tanh(TANH_SCALE * w[i, o])
                a[i, o] = t * t
                da[i, o] = 2.0 * TANH_SCALE * t * (1.0 - t * t)
            else:
                a[i, o] = fabs(w[i, o])
                da[i, o] = _sign(w[i, o])


cdef inline double _pow_conv(double m, double wv) nogil:
    # C99 pow already follows the |0|^w convention (0 / 1 / +inf) and is
    # exact at integer exponents.
    return pow(m, wv)


def nru_forward(double[:, ::1] x, double[:, ::1] w, bint training):
    cdef Py_ssize_t n_rows = x.shape[0], n_in = x.shape[1], n_out = w.shape[1]
    y_arr = np.empty((n_rows, n_out))
    f_arr = np.empty((n_rows, n_in, n_out))
    p_arr = np.empty((n_rows, n_in, n_out))
    a_arr = np.empty((n_in, n_out))
    da_arr = np.empty((n_in, n_out))
    cdef double[:, ::1] y = y_arr, a = a_arr, da = da_arr
    cdef double[:, :, ::1] f = f_arr, p = p_arr
    _nru_abs_tables(w, training, a, da)
    cdef Py_ssize_t n, i, o
    cdef double m, s, lm, pv, fv, prod
    for n in range(n_rows):
        for o in range(n_out):
            prod = 1.0
            for i in range(n_in):
                m = fabs(x[n, i])
                s = _sign(x[n, i])
                pv = _pow_conv(m, w[i, o])
                p[n, i, o] = pv
                if m == 0.0:
                    fv = INFINITY if w[i, o] < 0.0 else 1.0 - a[i, o]
                else:
                    fv = s * pv * a[i, o] + 1.0 - a[i, o]
                f[n, i, o] = fv
                prod *= fv
            y[n, o] = prod
    return y_arr, f_arr, p_arr, a_arr, da_arr


def nru_backward(double[:, ::1] x, double[:, ::1] w, double[:, :, ::1] f,
                 double[:, :, ::1] p, double[:, ::1] a, double[:, ::1] da,
                 double[:, ::1] gy):
    cdef Py_ssize_t n_rows = x.shape[0], n_in = x.shape[1], n_out = w.shape[1]
    gw_arr = np.zeros((n_in, n_out))
    gx_arr = np.zeros((n_rows, n_in))
    cdef double[:, ::1] gw = gw_arr, gx = gx_arr
    pre_arr = np.empty(n_in)
    cdef double[::1] pre = pre_arr
    cdef Py_ssize_t n, i, o
    cdef double m, s, lm, inv_m, sp, dfdw, dfdx, acc, suf, r, g
    for n in range(n_rows):
        for o in range(n_out):
            g = gy[n, o]
            acc = 1.0
            for i in range(n_in):
                pre[i] = acc
                acc *= f[n, i, o]
            suf = 1.0
            for i in range(n_in - 1, -1, -1):
                r = pre[i] * suf
                m = fabs(x[n, i])
                if m > 0.0:
                    s = _sign(x[n, i])
                    lm = log(m)
                    inv_m = 1.0 / m
                    sp = s * p[n, i, o]
                    dfdw = sp * lm * a[i, o] + (sp - 1.0) * da[i, o]
                    dfdx = a[i, o] * w[i, o] * p[n, i, o] * inv_m
                    gw[i, o] += g * dfdw * r
                    gx[n, i] += g * dfdx * r
                suf *= f[n, i, o]
    return gw_arr, gx_arr


def nru_sep_forward(double[:, ::1] x, double[:, ::1] w, bint training):
    cdef Py_ssize_t n_rows = x.shape[0], n_in = x.shape[1], n_out = w.shape[1]
    y_arr = np.empty((n_rows, n_out))
    fm_arr = np.empty((n_rows, n_in, n_out))
    p_arr = np.empty((n_rows, n_in, n_out))
    a_arr = np.empty((n_in, n_out))
    da_arr = np.empty((n_in, n_out))
    sgn_arr = np.empty((n_rows, n_out))
    cdef double[:, ::1] y = y_arr, a = a_arr, da = da_arr, sgn = sgn_arr
    cdef double[:, :, ::1] fm = fm_arr, p = p_arr
    _nru_abs_tables(w, training, a, da)
    cdef Py_ssize_t n, i, o
    cdef double m, s, lm, pv, fv, prod, spd, rw
    for n in range(n_rows):
        for o in range(n_out):
            prod = 1.0
            spd = 1.0
            for i in range(n_in):
                m = fabs(x[n, i])
                s = _sign(x[n, i])
                pv = _pow_conv(m, w[i, o])
                p[n, i, o] = pv
                if m == 0.0:
                    fv = INFINITY if w[i, o] < 0.0 else 1.0 - a[i, o]
                else:
                    fv = pv * a[i, o] + 1.0 - a[i, o]
                fm[n, i, o] = fv
                prod *= fv
                rw = rint(w[i, o])
                if rw != 0.0:
                    spd *= s if rw > 0.0 else 1.0 / s
            sgn[n, o] = spd
            y[n, o] = spd * prod
    return y_arr, fm_arr, p_arr, a_arr, da_arr, sgn_arr


def nru_sep_backward(double[:, ::1] x, double[:, ::1] w, double[:, :, ::1] fm,
                     double[:, :, ::1] p, double[:, ::1] a, double[:, ::1] da,
                     double[:, ::1] sgn, double[:, ::1] gy):
    cdef Py_ssize_t n_rows = x.shape[0], n_in = x.shape[1], n_out = w.shape[1]
    gw_arr = np.zeros((n_in, n_out))
    gx_arr = np.zeros((n_rows, n_in))
    cdef double[:, ::1] gw = gw_arr, gx = gx_arr
    pre_arr = np.empty(n_in)
    cdef double[::1] pre = pre_arr
    cdef Py_ssize_t n, i, o
    cdef double m, s, lm, inv_m, dfdw, dfdx, acc, suf, r, g
    for n in range(n_rows):
        for o in range(n_out):
            g = gy[n, o] * sgn[n, o]
            acc = 1.0
            for i in range(n_in):
                pre[i] = acc
                acc *= fm[n, i, o]
            suf = 1.0
            for i in range(n_in - 1, -1, -1):
                r = pre[i] * suf
                m = fabs(x[n, i])
                if m > 0.0:
                    s = _sign(x[n, i])
                    lm = log(m)
                    inv_m = 1.0 / m
                    dfdw = p[n, i, o] * lm * a[i, o] + (p[n, i, o] - 1.0) * da[i, o]
                    dfdx = a[i, o] * w[i, o] * p[n, i, o] * inv_m * s
                    gw[i, o] += g * dfdw * r
                    gx[n, i] += g * dfdx * r
                suf *= fm[n, i, o]
    return gw_arr, gx_arr


# ---------------------------------------------------------------------------
# Real NPU / NPU
# ---------------------------------------------------------------------------

def _npu_tables(double[:, ::1] x, double[::1] g, double eps):
    cdef Py_ssize_t n_rows = x.shape[0], n_in = x.shape[1]
    gc_arr = np.empty(n_in)
    gmask_arr = np.empty(n_in)
    r_arr = np.empty((n_rows, n_in))
    logr_arr = np.empty((n_rows, n_in))
    k_arr = np.empty((n_rows, n_in))
    cdef double[::1] gc = gc_arr, gmask = gmask_arr
    cdef double[:, ::1] r = r_arr, logr = logr_arr, k = k_arr
    cdef Py_ssize_t n, i
    cdef double gv, rv
    for i in range(n_in):
        gv = g[i]
        gc[i] = 0.0 if gv < 0.0 else (1.0 if gv > 1.0 else gv)
        gmask[i] = 1.0 if (gv >= 0.0 and gv <= 1.0) else 0.0
    for n in range(n_rows):
        for i in range(n_in):
            rv = gc[i] * (fabs(x[n, i]) + eps) + (1.0 - gc[i])
            r[n, i] = rv
            logr[n, i] = log(rv)
            k[n, i] = M_PI * gc[i] if x[n, i] < 0.0 else 0.0
    return gc_arr, gmask_arr, r_arr, logr_arr, k_arr


def realnpu_forward(double[:, ::1] x, double[:, ::1] w, double[::1] g,
                    double eps):
    gc_arr, gmask_arr, r_arr, logr_arr, k_arr = _npu_tables(x, g, eps)
    cdef Py_ssize_t n_rows = x.shape[0], n_in = x.shape[1], n_out = w.shape[1]
    e_arr = np.empty((n_rows, n_out))
    ck_arr = np.empty((n_rows, n_out))
    sk_arr = np.empty((n_rows, n_out))
    y_arr = np.empty((n_rows, n_out))
    cdef double[:, ::1] logr = logr_arr, k = k_arr
    cdef double[:, ::1] e = e_arr, ck = ck_arr, sk = sk_arr, y = y_arr
    cdef Py_ssize_t n, i, o
    cdef double ell, kk, wv
    for n in range(n_rows):
        for o in range(n_out):
            ell = 0.0
            kk = 0.0
            for i in range(n_in):
                wv = w[i, o]
                if wv != 0.0:
                    ell += wv * logr[n, i]
                kk += wv * k[n, i]
            e[n, o] = exp(ell)
            ck[n, o] = cos(kk)
            sk[n, o] = sin(kk)
            y[n, o] = e[n, o] * ck[n, o]
    return y_arr, gc_arr, gmask_arr, r_arr, logr_arr, k_arr, e_arr, ck_arr, sk_arr


def realnpu_backward(double[:, ::1] x, double[:, ::1] w, double[::1] g,
                     double eps, double[::1] gc, double[::1] gmask,
                     double[:, ::1] r, double[:, ::1] logr, double[:, ::1] k,
                     double[:, ::1] e, double[:, ::1] ck, double[:, ::1] sk,
                     double[:, ::1] gy):
    cdef Py_ssize_t n_rows = x.shape[0], n_in = x.shape[1], n_out = w.shape[1]
    gw_arr = np.zeros((n_in, n_out))
    gg_arr = np.zeros(n_in)
    gx_arr = np.zeros((n_rows, n_in))
    cdef double[:, ::1] gw = gw_arr, gx = gx_arr
    cdef double[::1] gg = gg_arr
    cdef Py_ssize_t n, i, o
    cdef double gec, ges, acc1, acc2, dlogr, dk, absx
    for n in range(n_rows):
        for i in range(n_in):
            absx = fabs(x[n, i])
            dlogr = (absx + eps - 1.0) / r[n, i]
            dk = M_PI if x[n, i] < 0.0 else 0.0
            acc1 = 0.0
            acc2 = 0.0
            for o in range(n_out):
                gec = gy[n, o] * e[n, o] * ck[n, o]
                ges = gy[n, o] * e[n, o] * sk[n, o]
                gw[i, o] += gec * logr[n, i] - ges * k[n, i]
                acc1 += gec * w[i, o]
                acc2 += ges * w[i, o]
            gg[i] += acc1 * dlogr - acc2 * dk
            gx[n, i] = acc1 * gc[i] * _sign(x[n, i]) / r[n, i]
    for i in range(n_in):
        gg[i] *= gmask[i]
    return gw_arr, gg_arr, gx_arr


def npu_forward(double[:, ::1] x, double[:, ::1] w_re, double[:, ::1] w_im,
                double[::1] g, double eps):
    gc_arr, gmask_arr, r_arr, logr_arr, k_arr = _npu_tables(x, g, eps)
    cdef Py_ssize_t n_rows = x.shape[0], n_in = x.shape[1], n_out = w_re.shape[1]
    e_arr = np.empty((n_rows, n_out))
    ck_arr = np.empty((n_rows, n_out))
    sk_arr = np.empty((n_rows, n_out))
    y_arr = np.empty((n_rows, n_out))
    cdef double[:, ::1] logr = logr_arr, k = k_arr
    cdef double[:, ::1] e = e_arr, ck = ck_arr, sk = sk_arr, y = y_arr
    cdef Py_ssize_t n, i, o
    cdef double ell, kk, wr, wi
    for n in range(n_rows):
        for o in range(n_out):
            ell = 0.0
            kk = 0.0
            for i in range(n_in):
                wr = w_re[i, o]
                wi = w_im[i, o]
                if wr != 0.0:
                    ell += wr * logr[n, i]
                if wi != 0.0:
                    kk += wi * logr[n, i]
                ell -= wi * k[n, i]
                kk += wr * k[n, i]
            e[n, o] = exp(ell)
            ck[n, o] = cos(kk)
            sk[n, o] = sin(kk)
            y[n, o] = e[n, o] * ck[n, o]
    return y_arr, gc_arr, gmask_arr, r_arr, logr_arr, k_arr, e_arr, ck_arr, sk_arr


def npu_backward(double[:, ::1] x, double[:, ::1] w_re, double[:, ::1] w_im,
                 double[::1] g, double eps, double[::1] gc, double[::1] gmask,
                 double[:, ::1] r, double[:, ::1] logr, double[:, ::1] k,
                 double[:, ::1] e, double[:, ::1] ck, double[:, ::1] sk,
                 double[:, ::1] gy):
    cdef Py_ssize_t n_rows = x.shape[0], n_in = x.shape[1], n_out = w_re.shape[1]
    gwre_arr = np.zeros((n_in, n_out))
    gwim_arr = np.zeros((n_in, n_out))
    gg_arr = np.zeros(n_in)
    gx_arr = np.zeros((n_rows, n_in))
    cdef double[:, ::1] gwre = gwre_arr, gwim = gwim_arr, gx = gx_arr
    cdef double[::1] gg = gg_arr
    cdef Py_ssize_t n, i, o
    cdef double gec, ges, a1, a2, b1, b2, dlogr, dk, absx
    for n in range(n_rows):
        for i in range(n_in):
            absx = fabs(x[n, i])
            dlogr = (absx + eps - 1.0) / r[n, i]
            dk = M_PI if x[n, i] < 0.0 else 0.0
            a1 = 0.0  # sum_o gec * w_re
            a2 = 0.0  # sum_o ges * w_im
            b1 = 0.0  # sum_o gec * w_im
            b2 = 0.0  # sum_o ges * w_re
            for o in range(n_out):
                gec = gy[n, o] * e[n, o] * ck[n, o]
                ges = gy[n, o] * e[n, o] * sk[n, o]
                gwre[i, o] += gec * logr[n, i] - ges * k[n, i]
                gwim[i, o] += -gec * k[n, i] - ges * logr[n, i]
                a1 += gec * w_re[i, o]
                a2 += ges * w_im[i, o]
                b1 += gec * w_im[i, o]
                b2 += ges * w_re[i, o]
            gg[i] += (a1 - a2) * dlogr - (b1 + b2) * dk
            gx[n, i] = (a1 - a2) * gc[i] * _sign(x[n, i]) / r[n, i]
    for i in range(n_in):
        gg[i] *= gmask[i]
    return gwre_arr, gwim_arr, gg_arr, gx_arr


# ---------------------------------------------------------------------------
# NMRU over the augmented input
# ---------------------------------------------------------------------------

def nmru_forward(double[:, ::1] aug, double[:, ::1] w, g, bint use_sign):
    cdef Py_ssize_t n_rows = aug.shape[0], n_in = aug.shape[1], n_out = w.shape[1]
    cdef bint gated = g is not None
    cdef double[::1] gvec
    gc_arr = None
    gmask_arr = None
    if gated:
        gvec = g
        gc_arr = np.empty(n_in)
        gmask_arr = np.empty(n_in)
    z_arr = np.empty((n_rows, n_in))
    m_arr = np.empty((n_rows, n_in))
    k_arr = np.zeros((n_rows, n_in))
    f_arr = np.empty((n_rows, n_in, n_out))
    mag_arr = np.empty((n_rows, n_out))
    ck_arr = np.ones((n_rows, n_out))
    sk_arr = np.zeros((n_rows, n_out))
    y_arr = np.empty((n_rows, n_out))
    cdef double[:, ::1] z = z_arr, m = m_arr, k = k_arr
    cdef double[:, ::1] mag = mag_arr, ck = ck_arr, sk = sk_arr, y = y_arr
    cdef double[:, :, ::1] f = f_arr
    cdef double[::1] gcv, gmv
    cdef Py_ssize_t n, i, o
    cdef double zv, prod, fv, kk, gval
    if gated:
        gcv = gc_arr
        gmv = gmask_arr
        for i in range(n_in):
            gval = gvec[i]
            gcv[i] = 0.0 if gval < 0.0 else (1.0 if gval > 1.0 else gval)
            gmv[i] = 1.0 if (gval >= 0.0 and gval <= 1.0) else 0.0
    for n in range(n_rows):
        for i in range(n_in):
            zv = gcv[i] * aug[n, i] if gated else aug[n, i]
            z[n, i] = zv
            m[n, i] = fabs(zv)
            if use_sign and zv < 0.0:
                k[n, i] = M_PI
    for n in range(n_rows):
        for o in range(n_out):
            prod = 1.0
            kk = 0.0
            for i in range(n_in):
                fv = w[i, o] * m[n, i] + 1.0 - w[i, o]
                f[n, i, o] = fv
                prod *= fv
                kk += w[i, o] * k[n, i]
            mag[n, o] = prod
            if use_sign:
                ck[n, o] = cos(kk)
                sk[n, o] = sin(kk)
            y[n, o] = prod * ck[n, o]
    return y_arr, z_arr, gc_arr, gmask_arr, m_arr, f_arr, mag_arr, k_arr, ck_arr, sk_arr


def nmru_backward(double[:, ::1] aug, double[:, ::1] w, g, double[:, ::1] z,
                  gc, gmask, double[:, ::1] m, double[:, :, ::1] f,
                  double[:, ::1] mag, double[:, ::1] k, double[:, ::1] ck,
                  double[:, ::1] sk, double[:, ::1] gy):
    cdef Py_ssize_t n_rows = aug.shape[0], n_in = aug.shape[1], n_out = w.shape[1]
    cdef bint gated = g is not None
    gw_arr = np.zeros((n_in, n_out))
    gz_arr = np.zeros((n_rows, n_in))
    cdef double[:, ::1] gw = gw_arr, gz = gz_arr
    pre_arr = np.empty(n_in)
    cdef double[::1] pre = pre_arr
    cdef Py_ssize_t n, i, o
    cdef double acc, suf, r, gck, gsm
    for n in range(n_rows):
        for o in range(n_out):
            gck = gy[n, o] * ck[n, o]
            gsm = gy[n, o] * sk[n, o] * mag[n, o]
            acc = 1.0
            for i in range(n_in):
                pre[i] = acc
                acc *= f[n, i, o]
            suf = 1.0
            for i in range(n_in - 1, -1, -1):
                r = pre[i] * suf
                gw[i, o] += gck * (m[n, i] - 1.0) * r - k[n, i] * gsm
                gz[n, i] += gck * w[i, o] * r
                suf *= f[n, i, o]
    for n in range(n_rows):
        for i in range(n_in):
            gz[n, i] *= _sign(z[n, i])
    gg_arr = None
    gaug_arr = gz_arr
    if gated:
        gg_arr = np.zeros(n_in)
        gaug_arr = np.empty((n_rows, n_in))
        _apply_gate_grads(gz, aug, gc, gmask, gg_arr, gaug_arr)
    return gw_arr, gg_arr, gaug_arr


def _apply_gate_grads(double[:, ::1] gz, double[:, ::1] aug, double[::1] gc,
                      double[::1] gmask, double[::1] gg, double[:, ::1] gaug):
    cdef Py_ssize_t n, i
    for n in range(gz.shape[0]):
        for i in range(gz.shape[1]):
            gg[i] += gz[n, i] * aug[n, i]
            gaug[n, i] = gz[n, i] * gc[i]
    for i in range(gz.shape[1]):
        gg[i] *= gmask[i]
