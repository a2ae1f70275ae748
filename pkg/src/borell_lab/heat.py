"""Heat semigroup Q_t and the quantile transform u_f = Phi^{-1}(Q_t f).

``Q_t f(x) = E f(x + sqrt(t) Z)`` with ``Z ~ gamma_n``. Closed forms are used
for Gaussian ramps, half-space and box indicators and constants; one
dimensional interval unions and concave composites go through the compiled
(or NumPy) kernel; everything else is integrated by tensor Gauss-Hermite
quadrature in the variable ``z``.

Gradients are computed without differentiating numerically where possible:
``grad Q_t f(x) = t^{-1/2} E[f(x + sqrt(t) Z) Z]`` and
``grad u = grad Q_t f / phi(u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri, ndtri_exp

from . import _backend
from ._tails import LOG_SQRT_2PI, concave_tail, intervals_tail, log_bvn
from ._kernels_py import CONCAVE, INTERVALS, bvn_cdf
from .errors import ConfigurationError, DomainError, TrivialFunctionError
from .functions import (
    BoxIndicator,
    Complement,
    ConcaveComposite,
    Constant,
    FunctionSpec,
    GridSampled,
    HalfspaceIndicator,
    IntervalIndicator,
    LinearGaussian,
    Reflect,
    as_points,
)
from .gaussian import MAX_TENSOR_DIM, gauss_hermite_rule, std_normal_pdf

__all__ = [
    "heat_apply",
    "heat_apply_bounded",
    "u_value",
    "u_grad",
    "u_second",
    "u_and_grad",
    "heat_invert_linear",
    "BoundedValue",
]

DEFAULT_ORDER = None
# per-dimension Gauss-Hermite orders when none is given; kinks in f converge slowly
_ORDER_BY_DIM = {1: 128, 2: 80, 3: 40}
_CHUNK_NODES = 2_000_000
_TAIL_U = 4.0


def _check_t(t: float) -> float:
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"heat time must be positive, got {t}")
    return t


def _kernel_params(f: FunctionSpec):
    if isinstance(f, IntervalIndicator) and f.intervals:
        return INTERVALS, np.asarray(f.intervals, dtype=float).ravel()
    if isinstance(f, ConcaveComposite) and f.dim == 1:
        return CONCAVE, np.asarray(f.V.segments_1d(), dtype=float).ravel()
    if isinstance(f, GridSampled) and f.dim == 1 and f.scale == "quantile":
        segs = _grid_segments(f)
        if segs is not None:
            return CONCAVE, segs.ravel()
    return None


def _grid_segments(f: GridSampled):
    """A 1-D quantile grid is piecewise linear in Phi^{-1}: one exact segment per cell.

    Returns None unless the finite cells form one contiguous run, which the
    kernel needs to account for the complementary mass.
    """
    xs = f.axes[0]
    d = np.asarray(f.data, dtype=float)
    ok = np.isfinite(d[:-1]) & np.isfinite(d[1:])
    cells = np.flatnonzero(ok)
    if cells.size == 0 or cells[-1] - cells[0] + 1 != cells.size:
        return None
    lo, hi = cells[0], cells[-1] + 1
    slopes = np.diff(d[lo:hi + 1]) / np.diff(xs[lo:hi + 1])
    segs = np.column_stack([xs[lo:hi], xs[lo + 1:hi + 1], slopes, d[lo:hi] - slopes * xs[lo:hi]])
    if f.outside == "extend":
        if lo == 0:
            segs = np.vstack([[-np.inf, xs[0], 0.0, d[0]], segs])
        if hi == xs.size - 1:
            segs = np.vstack([segs, [xs[-1], np.inf, 0.0, d[-1]]])
    return segs


def _quadrature(f: FunctionSpec, t: float, pts: np.ndarray, order: int):
    """Return (q, 1 - q, grad q) by tensor Gauss-Hermite quadrature."""
    dim = f.dim
    if dim > MAX_TENSOR_DIM:
        raise ConfigurationError(f"quadrature for Q_t is limited to dim <= {MAX_TENSOR_DIM}")
    if order is None:
        order = _ORDER_BY_DIM[dim]
    nodes, weights = gauss_hermite_rule(order).tensor(dim)
    rt = math.sqrt(t)
    n = pts.shape[0]
    q = np.empty(n)
    qc = np.empty(n)
    dq = np.empty((n, dim))
    step = max(1, _CHUNK_NODES // len(weights))
    for s in range(0, n, step):
        block = pts[s:s + step]
        shifted = block[:, None, :] + rt * nodes[None, :, :]
        vals = f._evaluate(shifted.reshape(-1, dim)).reshape(block.shape[0], -1)
        q[s:s + step] = vals @ weights
        qc[s:s + step] = (1.0 - vals) @ weights
        dq[s:s + step] = np.einsum("pk,k,kd->pd", vals, weights, nodes) / rt
    return np.clip(q, 0.0, 1.0), np.clip(qc, 0.0, 1.0), dq


def _from_q(q, qc, dq):
    u = np.where(q <= 0.5, ndtri(q), -ndtri(qc))
    with np.errstate(divide="ignore", invalid="ignore"):
        du = dq / std_normal_pdf(u)[:, None]
    du = np.where(np.isfinite(u)[:, None], du, 0.0)
    return u, du


def _u_grad(f: FunctionSpec, t: float, pts: np.ndarray, method: str, order: int):
    """u_f(t, pts) and its gradient, shape (N,) and (N, dim). Trivial f gives +-inf and 0."""
    triv = f.trivial_value()
    n, dim = pts.shape
    if triv is not None:
        return np.full(n, np.inf if triv else -np.inf), np.zeros((n, dim))
    if method == "quadrature":
        return _from_q(*_quadrature(f, t, pts, order))
    if isinstance(f, LinearGaussian):
        a = np.asarray(f.a)
        s = math.sqrt(1.0 + t * float(a @ a))
        return (pts @ a + f.b) / s, np.broadcast_to(a / s, (n, dim)).copy()
    if isinstance(f, HalfspaceIndicator):
        a = np.asarray(f.a)
        s = math.sqrt(t * float(a @ a))
        return (pts @ a + f.b) / s, np.broadcast_to(a / s, (n, dim)).copy()
    if isinstance(f, Constant):
        return np.full(n, float(ndtri(f.c))), np.zeros((n, dim))
    if isinstance(f, Complement):
        u, du = _u_grad(f.base, t, pts, method, order)
        return -u, -du
    if isinstance(f, Reflect):
        u, du = _u_grad(f.base, t, -pts, method, order)
        return u, -du
    if isinstance(f, BoxIndicator):
        return _box(f, t, pts)
    if isinstance(f, ConcaveComposite) and dim > 1 and f.V.lower is None and len(f.V.offsets) <= 2:
        exact = _few_pieces(f, t, pts)
        if exact is not None:
            return exact
    kern = _kernel_params(f)
    if kern is not None:
        u, du = _backend.smooth_u_1d(kern[0], kern[1], t, pts[:, 0])
        # differences of probabilities lose relative accuracy past |u| ~ 4
        far = ~(np.abs(u) <= _TAIL_U)
        if np.any(far):
            tail = intervals_tail if kern[0] == INTERVALS else concave_tail
            u, du = u.copy(), du.copy()
            u[far], du[far] = tail(kern[1].reshape(-1, 2 if kern[0] == INTERVALS else 4), t, pts[far, 0])
        return u, du[:, None]
    return _from_q(*_quadrature(f, t, pts, order))


def _few_pieces(f: ConcaveComposite, t: float, pts: np.ndarray):
    """Phi(min of one or two affine pieces) smoothed in closed form.

    With W ~ N(0,1) independent of Z, Q_t f(x) = P(W - sqrt(t) <s_i, Z> <= <s_i, x> + o_i for all i),
    a Gaussian orthant probability with covariance 1 + t <s_i, s_j>.
    """
    s = f.V.slope_array
    o = f.V.offset_array
    sig = np.sqrt(1.0 + t * np.sum(s * s, axis=1))
    z = (pts @ s.T + o) / sig
    if len(o) == 1:
        return z[:, 0], np.broadcast_to(s[0] / sig[0], pts.shape).copy()
    r = (1.0 + t * float(s[0] @ s[1])) / (sig[0] * sig[1])
    if abs(r) > 1.0 - 1e-9:
        return None
    h, k = z[:, 0], z[:, 1]
    w = math.sqrt((1.0 - r) * (1.0 + r))
    # upper orthant by symmetry; P(not both) = Phi(-h) + Phi(-k) - P(both above)
    log_q = log_bvn(h, k, r)
    la, lb = log_ndtr(-h), log_ndtr(-k)
    hi, lo = np.maximum(la, lb), np.minimum(la, lb)
    joint = np.exp(log_bvn(-h, -k, r) - hi)
    log_qc = hi + np.log1p(np.exp(lo - hi) - joint)
    lower = log_q <= log_qc
    u = np.where(lower, ndtri_exp(np.minimum(log_q, 0.0)), -ndtri_exp(np.minimum(log_qc, 0.0)))
    log_pdf_u = -0.5 * u * u - LOG_SQRT_2PI
    lh = -0.5 * h * h - LOG_SQRT_2PI + log_ndtr((k - r * h) / w) - math.log(sig[0])
    lk = -0.5 * k * k - LOG_SQRT_2PI + log_ndtr((h - r * k) / w) - math.log(sig[1])
    du = np.exp(lh - log_pdf_u)[:, None] * s[0] + np.exp(lk - log_pdf_u)[:, None] * s[1]
    return u, du


def _box(f: BoxIndicator, t: float, pts: np.ndarray):
    rt = math.sqrt(t)
    alpha = (np.asarray(f.lower) - pts) / rt
    beta = (np.asarray(f.upper) - pts) / rt
    # per-axis mass p and its complement c, each without cancellation
    p = np.where(alpha > 0.0, ndtr(-alpha) - ndtr(-beta), ndtr(beta) - ndtr(alpha))
    c = ndtr(alpha) + ndtr(-beta)
    with np.errstate(divide="ignore"):
        logp = np.log(p)
    q = np.exp(logp.sum(axis=1))
    qc = -np.expm1(np.log1p(-c).sum(axis=1))
    dens = np.where(np.isfinite(alpha), std_normal_pdf(alpha), 0.0) - np.where(
        np.isfinite(beta), std_normal_pdf(beta), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dq = q[:, None] * dens / (p * rt)
    dq = np.nan_to_num(dq, nan=0.0, posinf=0.0, neginf=0.0)
    return _from_q(q, qc, dq)


def _prepare(f: FunctionSpec, t: float, x):
    t = _check_t(t)
    pts = as_points(x, f.dim)
    return t, pts


def _shape_scalar(x, dim, values):
    single = np.ndim(x) == 0 or (np.ndim(x) == 1 and (dim > 1 or np.shape(x)[0] == 1))
    return float(values[0]) if single else values


def u_and_grad(f: FunctionSpec, t: float, x, method: str = "auto", order: int | None = DEFAULT_ORDER):
    """Batched ``(u_f(t, x), grad u_f(t, x))`` for points ``x`` of shape (N, dim).

    Trivial functions yield ``u = +-inf`` and a zero gradient instead of raising;
    this is the entry point used by the drift and PDE code.
    """
    t, pts = _prepare(f, t, x)
    return _u_grad(f, t, pts, method, order)


def heat_apply(f: FunctionSpec, t: float, x, method: str = "auto", order: int | None = DEFAULT_ORDER):
    """Q_t f(x). ``method="quadrature"`` forces Gauss-Hermite even where a closed form exists."""
    t, pts = _prepare(f, t, x)
    if method not in ("auto", "quadrature"):
        raise ConfigurationError(f"unknown method {method!r}")
    if method == "quadrature" and f.trivial_value() is None:
        q = _quadrature(f, t, pts, order)[0]
    else:
        q = ndtr(_u_grad(f, t, pts, method, order)[0])
    return _shape_scalar(x, f.dim, q)


@dataclass(frozen=True)
class BoundedValue:
    value: np.ndarray | float
    bias_bound: float


def heat_apply_bounded(f: FunctionSpec, t: float, x, order: int = 64) -> BoundedValue:
    """Q_t f(x) by quadrature together with a bound on the truncation bias.

    The rule only sees ``f`` on ``x + sqrt(t) * [-z_max, z_max]^n``; the
    Gaussian mass outside that cube bounds the bias because ``0 <= f <= 1``.
    This is the path for sampled functions, which are only known on a box.
    """
    t, pts = _prepare(f, t, x)
    rule = gauss_hermite_rule(order)
    zmax = float(np.max(rule.nodes))
    bias = min(1.0, f.dim * 2.0 * float(ndtr(-zmax)))
    q = _quadrature(f, t, pts, order)[0]
    return BoundedValue(_shape_scalar(x, f.dim, q), bias)


def u_value(f: FunctionSpec, t: float, x, method: str = "auto", order: int | None = DEFAULT_ORDER):
    """u_f(t, x) = Phi^{-1}(Q_t f(x)); finite for every nontrivial f."""
    if f.trivial_value() is not None:
        raise TrivialFunctionError(f"u_f is infinite for the trivial function {f!r}")
    t, pts = _prepare(f, t, x)
    return _shape_scalar(x, f.dim, _u_grad(f, t, pts, method, order)[0])


def _fd_step(pts: np.ndarray, h):
    if h is not None:
        return np.full(pts.shape[0], float(h))
    return 1e-4 * np.maximum(1.0, np.max(np.abs(pts), axis=1))


def u_grad(f: FunctionSpec, t: float, x, scheme: str = "auto", h: float | None = None,
           order: int | None = DEFAULT_ORDER):
    """Spatial gradient of u_f.

    ``scheme="analytic"`` differentiates the representation (closed forms, the
    kernel, or the z-weighted quadrature); ``"fd"`` uses central differences
    with step ``h`` (default ``1e-4 * max(1, |x|)``). ``"auto"`` is analytic
    except for grid-sampled functions.
    """
    if f.trivial_value() is not None:
        raise TrivialFunctionError(f"u_f is infinite for the trivial function {f!r}")
    t, pts = _prepare(f, t, x)
    if scheme == "auto":
        scheme = "fd" if isinstance(f, GridSampled) else "analytic"
    if scheme == "analytic":
        g = _u_grad(f, t, pts, "auto", order)[1]
    elif scheme in ("fd", "central_fd"):
        step = _fd_step(pts, h)
        g = np.empty_like(pts)
        for k in range(f.dim):
            e = np.zeros(f.dim)
            e[k] = 1.0
            up = _u_grad(f, t, pts + step[:, None] * e, "auto", order)[0]
            dn = _u_grad(f, t, pts - step[:, None] * e, "auto", order)[0]
            g[:, k] = (up - dn) / (2.0 * step)
    else:
        raise ConfigurationError(f"unknown gradient scheme {scheme!r}")
    single = np.ndim(x) == 0 or (np.ndim(x) == 1 and (f.dim > 1 or np.shape(x)[0] == 1))
    if single:
        return g[0] if f.dim > 1 else float(g[0, 0])
    return g


def u_second(f: FunctionSpec, t: float, x, h: float = 1e-3, order: int | None = DEFAULT_ORDER):
    """Second derivative of u_f for one-dimensional f, 3-point stencil."""
    if f.dim != 1:
        raise DomainError("u_second is defined for one-dimensional functions")
    if f.trivial_value() is not None:
        raise TrivialFunctionError(f"u_f is infinite for the trivial function {f!r}")
    t, pts = _prepare(f, t, x)
    xs = pts[:, 0]
    stacked = np.concatenate([xs - h, xs, xs + h])[:, None]
    u = _u_grad(f, t, stacked, "auto", order)[0].reshape(3, -1)
    d2 = (u[0] - 2.0 * u[1] + u[2]) / (h * h)
    return _shape_scalar(x, 1, d2)


def heat_invert_linear(t: float, a, b: float, tol: float = 1e-9) -> FunctionSpec:
    """The unique f with Q_t f = Phi(<a, .> + b).

    Slopes with ``|a| = t^{-1/2}`` come from half-space indicators; smaller
    slopes from a Gaussian ramp. Larger slopes are impossible because u_f is
    ``t^{-1/2}``-Lipschitz.
    """
    t = _check_t(t)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = float(b)
    norm = float(np.linalg.norm(a))
    limit = 1.0 / math.sqrt(t)
    if norm > limit + 1e-12:
        raise DomainError(
            f"|a| = {norm:.15g} exceeds the Lipschitz bound t^-1/2 = {limit:.15g}; "
            "no function has this heat transform")
    if abs(norm - limit) <= tol:
        return HalfspaceIndicator(tuple(a), b)
    s = math.sqrt(1.0 - t * norm * norm)
    return LinearGaussian(tuple(a / s), b / s)
