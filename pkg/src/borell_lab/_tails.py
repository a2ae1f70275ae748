"""Log-space evaluation of smoothed one-dimensional families far in the tails.

The direct kernels form Q_t f as differences of probabilities, which loses
all relative accuracy once Q_t f (or 1 - Q_t f) is small against the terms
being subtracted. Here every mass is carried as a logarithm, so u stays
finite and accurate as long as it is representable.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import log_ndtr, logsumexp, ndtri_exp

from ._kernels_py import bvn_cdf

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_LAGUERRE = np.polynomial.laguerre.laggauss(64)


def log_pdf(z):
    return -0.5 * np.square(z) - LOG_SQRT_2PI


def log1mexp(x):
    """log(1 - exp(x)) for x <= 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > -math.log(2.0), np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def _log_sub(hi, lo):
    """log(exp(hi) - exp(lo)) for lo <= hi, -inf when both vanish."""
    with np.errstate(invalid="ignore"):
        return np.where(hi == -np.inf, -np.inf, hi + log1mexp(np.minimum(lo - hi, 0.0)))


def log_ndtr_diff(a, b):
    """log(Phi(b) - Phi(a)) for a <= b, using the upper tail right of 0."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    up = a > 0.0
    return np.where(up, _log_sub(log_ndtr(-a), log_ndtr(-b)), _log_sub(log_ndtr(b), log_ndtr(a)))


def log_bvn(h, k, r: float):
    """log P(X <= h, Y <= k) for standard normals with correlation r, |r| < 1.

    Owen's T is used where it is accurate. For small probabilities the
    smaller argument m is integrated out as y = m - v; the factor exp(-|m| v),
    sharpened by the conditional tail when r < 0, becomes the Gauss-Laguerre
    weight.
    """
    h, k = np.broadcast_arrays(np.asarray(h, float), np.asarray(k, float))
    h, k = h.copy(), k.copy()
    with np.errstate(divide="ignore"):
        out = np.log(bvn_cdf(h, k, r))
    out = np.where(h == np.inf, log_ndtr(k), out)
    out = np.where(k == np.inf, log_ndtr(h), out)
    m = np.minimum(h, k)
    fin = np.isfinite(h) & np.isfinite(k)
    tail = fin & ((m < -1.0) | (out < math.log(1e-3)))
    if np.any(tail):
        m = m[tail]
        other = np.maximum(h[tail], k[tail])
        w = math.sqrt((1.0 - r) * (1.0 + r))
        a = (other - r * m) / w
        mills = np.exp(log_pdf(a) - log_ndtr(a))
        am = np.abs(m)
        lam = am + np.maximum(0.0, -r / w * mills)
        nodes, weights = _LAGUERRE
        v = nodes[None, :] / lam[:, None]
        # phi(m - v) = phi(m) exp(-|m| v - v^2 / 2) for m < 0, and v = s / lam
        terms = (np.log(weights)[None, :] + (lam - am)[:, None] * v - 0.5 * v * v
                 + log_ndtr((other[:, None] - r * (m[:, None] - v)) / w))
        out[tail] = log_pdf(m) - np.log(lam) + logsumexp(terms, axis=1)
    return out


def log_segment_mass(alpha, beta, p: float, q):
    """log of the integral of Phi(p z + q) phi(z) over [alpha, beta]."""
    d = math.sqrt(1.0 + p * p)
    k = q / d
    r = -p / d
    out = np.empty(np.shape(alpha))
    up = alpha >= 0.0
    if np.any(up):
        out[up] = _log_sub(log_bvn(-alpha[up], k[up], -r), log_bvn(-beta[up], k[up], -r))
    lo = ~up
    if np.any(lo):
        out[lo] = _log_sub(log_bvn(beta[lo], k[lo], r), log_bvn(alpha[lo], k[lo], r))
    return out


def _finish(log_q, log_qc, grad_terms):
    """u and du from log Q, log(1 - Q) and signed log terms of dQ/dx."""
    lower = log_q <= log_qc
    u = np.where(lower, ndtri_exp(np.minimum(log_q, 0.0)), -ndtri_exp(np.minimum(log_qc, 0.0)))
    lp = log_pdf(u)
    du = np.zeros_like(u)
    for sign, lt in grad_terms:
        du += sign * np.exp(lt - lp)
    return u, du


def _lse(terms):
    with np.errstate(divide="ignore"):
        return logsumexp(np.stack(terms), axis=0)


def concave_tail(segs: np.ndarray, t: float, x: np.ndarray):
    """(u, du) for f = Phi(s x + o) on contiguous segments [c0, c1], 0 outside them."""
    rt = math.sqrt(t)
    lq, lqc, grad = [], [], []
    for c0, c1, s, o in segs:
        alpha = np.full_like(x, -np.inf) if c0 == -np.inf else (c0 - x) / rt
        beta = np.full_like(x, np.inf) if c1 == np.inf else (c1 - x) / rt
        p = s * rt
        qq = s * x + o
        lq.append(log_segment_mass(alpha, beta, p, qq))
        lqc.append(log_segment_mass(alpha, beta, -p, -qq))
        if s != 0.0:
            d2 = 1.0 + p * p
            d = math.sqrt(d2)
            m = p * qq / d2
            grad.append((math.copysign(1.0, s),
                         math.log(abs(s)) + log_pdf(qq / d) - math.log(d) + log_ndtr_diff(d * (alpha + m), d * (beta + m))))
    first, last = segs[0], segs[-1]
    if np.isfinite(first[0]):
        a0 = (first[0] - x) / rt
        lqc.append(log_ndtr(a0))
        grad.append((1.0, log_ndtr(first[2] * first[0] + first[3]) + log_pdf(a0) - math.log(rt)))
    if np.isfinite(last[1]):
        b1 = (last[1] - x) / rt
        lqc.append(log_ndtr(-b1))
        grad.append((-1.0, log_ndtr(last[2] * last[1] + last[3]) + log_pdf(b1) - math.log(rt)))
    return _finish(_lse(lq), _lse(lqc), grad)


def intervals_tail(ivs: np.ndarray, t: float, x: np.ndarray):
    """(u, du) for the indicator of sorted disjoint closed intervals."""
    rt = math.sqrt(t)
    lq, grad = [], []
    lqc = [log_ndtr((ivs[0, 0] - x) / rt), log_ndtr(-(ivs[-1, 1] - x) / rt)]
    for j, (l, r) in enumerate(ivs):
        alpha = (l - x) / rt
        beta = (r - x) / rt
        lq.append(log_ndtr_diff(alpha, beta))
        if np.isfinite(l):
            grad.append((1.0, log_pdf(alpha) - math.log(rt)))
        if np.isfinite(r):
            grad.append((-1.0, log_pdf(beta) - math.log(rt)))
        if j + 1 < len(ivs):
            lqc.append(log_ndtr_diff(beta, (ivs[j + 1, 0] - x) / rt))
    return _finish(_lse(lq), _lse(lqc), grad)
