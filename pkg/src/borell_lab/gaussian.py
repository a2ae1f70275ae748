"""Standard Gaussian primitives: cdf, quantile, density and integration against gamma_n."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import ndtr, ndtri

from .errors import ConfigurationError, DomainError

SQRT_2PI = math.sqrt(2.0 * math.pi)
MAX_TENSOR_DIM = 3


class ExtendedReal(float):
    """A float on the extended line where ``+inf + -inf`` is ``-inf``.

    Only addition needs a rule of its own; ordering is the one floats
    already have (``-inf < r < +inf``).
    """

    def __new__(cls, value=0.0):
        return super().__new__(cls, value)

    def __add__(self, other):
        return ExtendedReal(ext_add(float(self), float(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return ExtendedReal(ext_add(float(self), -float(other)))

    def __rsub__(self, other):
        return ExtendedReal(ext_add(float(other), -float(self)))

    def __neg__(self):
        return ExtendedReal(-float(self))

    def __mul__(self, other):
        other = float(other)
        if other == 0.0 and math.isinf(self):
            # lambda * (+-inf) only ever occurs with lambda > 0
            raise DomainError("0 * inf is undefined on the extended line")
        return ExtendedReal(float(self) * other)

    __rmul__ = __mul__

    def __repr__(self):
        return f"ExtendedReal({float(self)!r})"

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self)


def ext_add(a: float, b: float) -> float:
    s = a + b
    if s != s and not (a != a or b != b):
        return -math.inf
    return s


def ext_sum(values) -> float:
    """Sum with the ``inf - inf = -inf`` convention (any ``-inf`` wins over ``+inf``)."""
    vals = [float(v) for v in values]
    if any(v == -math.inf for v in vals):
        return -math.inf
    return math.fsum(vals) if all(math.isfinite(v) for v in vals) else sum(vals)


def ext_sum_array(terms: np.ndarray, axis: int = 0) -> np.ndarray:
    """Vectorised :func:`ext_sum` along ``axis``."""
    terms = np.asarray(terms, dtype=float)
    with np.errstate(invalid="ignore"):
        out = terms.sum(axis=axis)
    has_neg = np.any(terms == -np.inf, axis=axis)
    return np.where(has_neg, -np.inf, out)


def ext_gap(lhs, rhs):
    """``lhs - rhs`` where two equal infinities give 0 (the inequality holds with equality)."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    with np.errstate(invalid="ignore"):
        out = lhs - rhs
    same_inf = np.isinf(lhs) & (lhs == rhs)
    out = np.where(same_inf, 0.0, out)
    return out if out.ndim else float(out)


def std_normal_cdf(x):
    """Phi(x). Accepts scalars or arrays, including +-inf."""
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def std_normal_sf(x):
    """1 - Phi(x) without cancellation."""
    out = ndtr(-np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / SQRT_2PI
    return float(out) if out.ndim == 0 else out


def std_normal_quantile(p):
    """Phi^{-1}(p) with Phi^{-1}(0) = -inf and Phi^{-1}(1) = +inf.

    Raises DomainError outside [0, 1].
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError(f"quantile requires p in [0, 1], got {p!r}")
    out = ndtri(arr)
    if out.ndim == 0:
        return ExtendedReal(out)
    return out


def quantile_from_tails(q, qc):
    """Phi^{-1} given both q and its complement 1 - q, using whichever is smaller.

    Keeps relative accuracy when q is within rounding of 1.
    """
    q = np.asarray(q, dtype=float)
    qc = np.asarray(qc, dtype=float)
    return np.where(q <= 0.5, ndtri(q), -ndtri(qc))


@dataclass(frozen=True)
class QuadratureRule:
    """Probabilist Gauss-Hermite rule normalised to integrate against gamma_1."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, fn(self.nodes)))

    def tensor(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes of shape (order**dim, dim) and matching product weights."""
        grids = np.meshgrid(*([self.nodes] * dim), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*([self.weights] * dim), indexing="ij")
        weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
        return nodes, weights


_RULE_CACHE: dict[int, QuadratureRule] = {}


def gauss_hermite_rule(order: int) -> QuadratureRule:
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= 128:
        raise ConfigurationError(f"Gauss-Hermite order must be in [1, 128], got {order!r}")
    order = int(order)
    rule = _RULE_CACHE.get(order)
    if rule is None:
        x, w = hermegauss(order)
        # enforce exact mirror symmetry of the rule
        x = 0.5 * (x - x[::-1])
        w = 0.5 * (w + w[::-1])
        w = w / w.sum()
        x.setflags(write=False)
        w.setflags(write=False)
        rule = _RULE_CACHE[order] = QuadratureRule(nodes=x, weights=w, order=order)
    return rule


@dataclass(frozen=True)
class MonteCarloConfig:
    n_samples: int = 200_000
    seed: int = 0
    antithetic: bool = True


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    stderr: float = 0.0


def gaussian_integral(
    f,
    dim: int,
    rule: Union[QuadratureRule, MonteCarloConfig, None] = None,
) -> IntegralEstimate:
    """Integrate a [0,1]-valued function against gamma_dim.

    ``f`` is either a FunctionSpec or any callable mapping an (N, dim) array
    to N values. Tensor quadrature is used for dim <= 3; Monte Carlo for
    larger dimensions or when an MC config is passed, in which case the
    standard error is reported.
    """
    if dim <= 0:
        raise DomainError(f"dimension must be positive, got {dim}")
    fn = f.evaluate if hasattr(f, "evaluate") else f
    if rule is None:
        rule = gauss_hermite_rule(40) if dim <= MAX_TENSOR_DIM else MonteCarloConfig()
    if isinstance(rule, QuadratureRule):
        if dim > MAX_TENSOR_DIM:
            raise ConfigurationError(f"tensor quadrature is limited to dim <= {MAX_TENSOR_DIM}")
        nodes, weights = rule.tensor(dim)
        val = float(np.dot(weights, fn(nodes)))
        return IntegralEstimate(min(1.0, max(0.0, val)))
    rng = np.random.Generator(np.random.Philox(key=rule.seed))
    n = rule.n_samples
    if rule.antithetic:
        half = rng.standard_normal((n // 2, dim))
        z = np.concatenate([half, -half])
        vals = fn(z)
        pairs = 0.5 * (vals[: n // 2] + vals[n // 2:])
        mean, sd, count = pairs.mean(), pairs.std(ddof=1), pairs.size
    else:
        vals = fn(rng.standard_normal((n, dim)))
        mean, sd, count = vals.mean(), vals.std(ddof=1), vals.size
    return IntegralEstimate(float(min(1.0, max(0.0, mean))), float(sd / math.sqrt(count)))
