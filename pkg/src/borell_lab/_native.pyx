# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled counterpart of ``_kernels_py``: one fused pass per point, no temporaries."""

from libc.math cimport sqrt, exp, fabs, asin, isfinite, INFINITY, M_PI
from scipy.special.cython_special cimport ndtr, ndtri, owens_t

import numpy as np

cdef double INV_SQRT_2PI = 0.3989422804014327

DEF LINEAR = 0
DEF HALFSPACE = 1
DEF INTERVALS = 2
DEF CONCAVE = 3
DEF CONSTANT = 4


cdef inline double _ndtr(double x) noexcept nogil:
    return ndtr(x)


cdef inline double _pdf(double z) noexcept nogil:
    return INV_SQRT_2PI * exp(-0.5 * z * z)


cdef inline double _cdf_diff(double a, double b) noexcept nogil:
    if a > 0.0:
        return _ndtr(-a) - _ndtr(-b)
    return _ndtr(b) - _ndtr(a)


cdef inline double _sign(double v) noexcept nogil:
    return (v > 0.0) - (v < 0.0)


cdef double _bvn(double h, double k, double r) noexcept nogil:
    cdef double s, th, tk, base, val, pos, neg
    if h == -INFINITY or k == -INFINITY:
        return 0.0
    if h == INFINITY:
        return _ndtr(k)
    if k == INFINITY:
        return _ndtr(h)
    if h == 0.0 and k == 0.0:
        return 0.25 + asin(r) / (2.0 * M_PI)
    s = sqrt((1.0 - r) * (1.0 + r))
    if h == 0.0:
        th = 0.25 * _sign(k)
    else:
        th = owens_t(h, (k - r * h) / (h * s))
    if k == 0.0:
        tk = 0.25 * _sign(h)
    else:
        tk = owens_t(k, (h - r * k) / (k * s))
    # sign tests, not products: h * k underflows to 0 when both are tiny
    if (h < 0.0 and k > 0.0) or (h > 0.0 and k < 0.0):
        pos = h if h > k else k
        neg = k if h > k else h
        base = 0.5 * _ndtr(neg) - 0.5 * _ndtr(-pos)
    else:
        base = 0.5 * _ndtr(h) + 0.5 * _ndtr(k)
    val = base - th - tk
    if (h == 0.0 or k == 0.0) and h + k < 0.0:
        val -= 0.5
    if val < 0.0:
        return 0.0
    if val > 1.0:
        return 1.0
    return val


cdef double _segment_mass(double alpha, double beta, double p, double q) noexcept nogil:
    cdef double d = sqrt(1.0 + p * p)
    cdef double k = q / d
    cdef double r = -p / d
    cdef double v
    if alpha >= 0.0:
        v = _bvn(-alpha, k, -r) - _bvn(-beta, k, -r)
    else:
        v = _bvn(beta, k, r) - _bvn(alpha, k, r)
    return v if v > 0.0 else 0.0


cdef double _segment_moment(double alpha, double beta, double p, double q) noexcept nogil:
    cdef double d2 = 1.0 + p * p
    cdef double d = sqrt(d2)
    cdef double m = p * q / d2
    cdef double ta = 0.0, tb = 0.0
    if isfinite(alpha):
        ta = _ndtr(p * alpha + q) * _pdf(alpha)
    if isfinite(beta):
        tb = _ndtr(p * beta + q) * _pdf(beta)
    return ta - tb + p * _pdf(q / d) / d * _cdf_diff(d * (alpha + m), d * (beta + m))


cdef void _concave(const double[::1] params, double t, double x,
                   double* q, double* qc, double* dq) noexcept nogil:
    cdef Py_ssize_t nseg = params.shape[0] // 4, j
    cdef double rt = sqrt(t), alpha, beta, p, qq, s, o
    q[0] = 0.0
    qc[0] = 0.0
    dq[0] = 0.0
    for j in range(nseg):
        s = params[4 * j + 2]
        o = params[4 * j + 3]
        alpha = (params[4 * j] - x) / rt
        beta = (params[4 * j + 1] - x) / rt
        p = s * rt
        qq = s * x + o
        q[0] += _segment_mass(alpha, beta, p, qq)
        qc[0] += _segment_mass(alpha, beta, -p, -qq)
        dq[0] += _segment_moment(alpha, beta, p, qq)
    qc[0] += _ndtr((params[0] - x) / rt) + _ndtr(-(params[4 * nseg - 3] - x) / rt)
    dq[0] /= rt


cdef void _intervals(const double[::1] params, double t, double x,
                     double* q, double* qc, double* dq) noexcept nogil:
    cdef Py_ssize_t niv = params.shape[0] // 2, j
    cdef double rt = sqrt(t), alpha, beta, prev_beta = 0.0
    q[0] = 0.0
    dq[0] = 0.0
    qc[0] = _ndtr((params[0] - x) / rt)
    for j in range(niv):
        alpha = (params[2 * j] - x) / rt
        beta = (params[2 * j + 1] - x) / rt
        q[0] += _cdf_diff(alpha, beta)
        if isfinite(alpha):
            dq[0] += _pdf(alpha)
        if isfinite(beta):
            dq[0] -= _pdf(beta)
        if j > 0:
            qc[0] += _cdf_diff(prev_beta, alpha)
        prev_beta = beta
    qc[0] += _ndtr(-prev_beta)
    dq[0] /= rt


def smooth_u_1d(int code, params, double t, x, double sx=1.0, double su=1.0):
    """Return ``(u, du)`` arrays for ``su * Phi^{-1}(Q_t f)(sx * x)``."""
    cdef const double[::1] prm = np.ascontiguousarray(params, dtype=np.float64)
    xa = np.ascontiguousarray(x, dtype=np.float64)
    shape = xa.shape
    cdef const double[::1] xv = xa.reshape(-1)
    cdef Py_ssize_t n = xv.shape[0], i
    u_arr = np.empty(n)
    du_arr = np.empty(n)
    cdef double[::1] u = u_arr
    cdef double[::1] du = du_arr
    cdef double xi, a, b, s, q = 0.0, qc = 0.0, dq = 0.0, ui, c_u
    with nogil:
        if code == LINEAR or code == HALFSPACE:
            a = prm[0]
            b = prm[1]
            if code == LINEAR:
                s = sqrt(1.0 + t * a * a)
            else:
                s = sqrt(t) * fabs(a)
            for i in range(n):
                xi = sx * xv[i]
                u[i] = su * ((a * xi + b) / s)
                du[i] = su * sx * (a / s)
        elif code == CONSTANT:
            c_u = ndtri(prm[0])
            for i in range(n):
                u[i] = su * c_u
                du[i] = 0.0
        else:
            for i in range(n):
                xi = sx * xv[i]
                if code == INTERVALS:
                    _intervals(prm, t, xi, &q, &qc, &dq)
                else:
                    _concave(prm, t, xi, &q, &qc, &dq)
                if q <= 0.5:
                    ui = ndtri(q)
                else:
                    ui = -ndtri(qc)
                u[i] = su * ui
                du[i] = su * sx * (dq / _pdf(ui))
    return u_arr.reshape(shape), du_arr.reshape(shape)
