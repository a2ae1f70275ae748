"""Pure-NumPy kernels for one-dimensional heat-smoothed functions.

For a 1-D function family encoded as ``(code, params)`` these return
``u = Phi^{-1}(Q_t f)`` and ``du/dx`` at many points in closed form. The
compiled module ``_native`` implements the same interface; see ``_backend``.

Family codes and parameter layout:

* 0 LINEAR     ``[a, b]``                       f = Phi(a x + b)
* 1 HALFSPACE  ``[a, b]`` (a != 0)              f = 1{a x + b >= 0}
* 2 INTERVALS  ``[l0, r0, l1, r1, ...]``        union of sorted disjoint intervals
* 3 CONCAVE    ``[c0, c1, s0, o0, c1, c2, ...]`` Phi(s x + o) on [c_j, c_{j+1}], 0 elsewhere
* 4 CONSTANT   ``[c]``                          0 < c < 1

``sx`` and ``su`` (each +-1) evaluate ``su * u(sx * x)``, which covers
reflection ``f(-x)`` and complement ``1 - f``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr, ndtri, owens_t

LINEAR, HALFSPACE, INTERVALS, CONCAVE, CONSTANT = range(5)

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def _cdf_diff(a, b):
    """Phi(b) - Phi(a) for a <= b, using upper tails when both are positive."""
    return np.where(a > 0.0, ndtr(-a) - ndtr(-b), ndtr(b) - ndtr(a))


def bvn_cdf(h, k, r):
    """P(X <= h, Y <= k) for standard normals with correlation r, |r| < 1.

    Owen's T representation; h and k may be infinite.
    """
    h, k, r = np.broadcast_arrays(np.asarray(h, float), np.asarray(k, float), np.asarray(r, float))
    out = np.zeros(h.shape)
    fin = np.isfinite(h) & np.isfinite(k)
    out = np.where((h == np.inf) & (k > -np.inf), ndtr(k), out)
    out = np.where((k == np.inf) & (h > -np.inf), ndtr(h), out)
    if not np.any(fin):
        return out
    hf, kf, rf = h[fin], k[fin], r[fin]
    s = np.sqrt((1.0 - rf) * (1.0 + rf))
    with np.errstate(divide="ignore", invalid="ignore"):
        ah = (kf - rf * hf) / (hf * s)
        ak = (hf - rf * kf) / (kf * s)
    th = np.where(hf == 0.0, 0.25 * np.sign(kf), owens_t(hf, np.nan_to_num(ah, nan=0.0)))
    tk = np.where(kf == 0.0, 0.25 * np.sign(hf), owens_t(kf, np.nan_to_num(ak, nan=0.0)))
    both_zero = (hf == 0.0) & (kf == 0.0)
    # sign tests, not products: hf * kf underflows to 0 when both are tiny
    opposite = ((hf < 0.0) & (kf > 0.0)) | ((hf > 0.0) & (kf < 0.0))
    # 1/2 Phi(h) + 1/2 Phi(k) - 1/2, rewritten with the upper tail of the positive argument
    pos = np.maximum(hf, kf)
    neg = np.minimum(hf, kf)
    base = np.where(opposite, 0.5 * ndtr(neg) - 0.5 * ndtr(-pos), 0.5 * ndtr(hf) + 0.5 * ndtr(kf))
    zero_neg = ((hf == 0.0) | (kf == 0.0)) & (hf + kf < 0.0)
    val = base - th - tk - np.where(zero_neg, 0.5, 0.0)
    val = np.where(both_zero, 0.25 + np.arcsin(rf) / (2.0 * math.pi), val)
    out[fin] = np.clip(val, 0.0, 1.0)
    return out


def _segment_mass(alpha, beta, p, q):
    """Integral of Phi(p z + q) phi(z) over [alpha, beta]."""
    d = np.sqrt(1.0 + p * p)
    k = q / d
    r = -p / d
    right = alpha >= 0.0
    # upper-tail form G(z) = P(Z > z, U <= k) avoids cancellation right of 0
    upper = bvn_cdf(-alpha, k, -r) - bvn_cdf(-beta, k, -r)
    lower = bvn_cdf(beta, k, r) - bvn_cdf(alpha, k, r)
    return np.maximum(np.where(right, upper, lower), 0.0)


def _segment_moment(alpha, beta, p, q):
    """Integral of Phi(p z + q) z phi(z) over [alpha, beta]."""
    d2 = 1.0 + p * p
    d = np.sqrt(d2)
    m = p * q / d2
    with np.errstate(invalid="ignore"):
        ta = np.where(np.isfinite(alpha), ndtr(p * alpha + q) * _pdf(alpha), 0.0)
        tb = np.where(np.isfinite(beta), ndtr(p * beta + q) * _pdf(beta), 0.0)
    inner = _cdf_diff(d * (alpha + m), d * (beta + m))
    return ta - tb + p * _pdf(q / d) / d * inner


def _concave(params, t, x):
    segs = np.asarray(params, float).reshape(-1, 4)
    rt = math.sqrt(t)
    q = np.zeros_like(x)
    qc = np.zeros_like(x)
    dq = np.zeros_like(x)
    for c0, c1, s, o in segs:
        alpha = (c0 - x) / rt
        beta = (c1 - x) / rt
        p = np.full_like(x, s * rt)
        qq = s * x + o
        q += _segment_mass(alpha, beta, p, qq)
        qc += _segment_mass(alpha, beta, -p, -qq)
        dq += _segment_moment(alpha, beta, p, qq)
    # mass outside the effective domain counts towards 1 - Q
    qc += ndtr((segs[0, 0] - x) / rt) + ndtr(-(segs[-1, 1] - x) / rt)
    return q, qc, dq / rt


def _intervals(params, t, x):
    ivs = np.asarray(params, float).reshape(-1, 2)
    rt = math.sqrt(t)
    q = np.zeros_like(x)
    dq = np.zeros_like(x)
    prev_beta = None
    qc = ndtr((ivs[0, 0] - x) / rt)
    for l, r in ivs:
        alpha = (l - x) / rt
        beta = (r - x) / rt
        q += _cdf_diff(alpha, beta)
        dq += np.where(np.isfinite(alpha), _pdf(alpha), 0.0) - np.where(np.isfinite(beta), _pdf(beta), 0.0)
        if prev_beta is not None:
            qc += _cdf_diff(prev_beta, alpha)
        prev_beta = beta
    qc += ndtr(-prev_beta)
    return q, qc, dq / rt


def smooth_u_1d(code, params, t, x, sx=1.0, su=1.0):
    """Return ``(u, du)`` arrays for ``su * Phi^{-1}(Q_t f)(sx * x)``."""
    x = sx * np.asarray(x, dtype=float)
    params = np.asarray(params, dtype=float)
    if code == LINEAR:
        a, b = params
        s = math.sqrt(1.0 + t * a * a)
        u = (a * x + b) / s
        du = np.full_like(x, a / s)
    elif code == HALFSPACE:
        a, b = params
        s = math.sqrt(t) * abs(a)
        u = (a * x + b) / s
        du = np.full_like(x, a / s)
    elif code == CONSTANT:
        u = np.full_like(x, float(ndtri(params[0])))
        du = np.zeros_like(x)
    else:
        q, qc, dq = (_intervals if code == INTERVALS else _concave)(params, t, x)
        u = np.where(q <= 0.5, ndtri(q), -ndtri(qc))
        with np.errstate(divide="ignore", invalid="ignore"):
            du = dq / _pdf(u)
    return su * u, (su * sx) * du
