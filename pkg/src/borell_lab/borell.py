"""The Borell function C, the deficit functional, the drift b and the PDE residual.

For an instance (lambda, mu, f, g, h)::

    C(t, x, y) = u_h(t, lambda x + mu y) - lambda u_f(t, x) - mu u_g(t, y)

solves ``dC/dt = 1/2 Delta_rho C + <b, grad C> - 1/2 |grad u_h|^2 C`` with
``rho = (1 - lambda^2 - mu^2) / (2 lambda mu)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, TrivialFunctionError
from .functions import FunctionSpec, as_points
from .gaussian import ExtendedReal, ext_gap, ext_sum
from .heat import u_and_grad

__all__ = [
    "BorellInstance",
    "MInstance",
    "rho",
    "c_value",
    "deficit",
    "deficit_m",
    "drift_b",
    "pde_residual",
    "gaussian_quantile",
    "DEGENERACY_EPS",
]

DEGENERACY_EPS = 1e-12


def rho(lam: float, mu: float) -> float:
    """Correlation parameter; snaps to exactly +-1 within ``DEGENERACY_EPS`` of the boundary."""
    lam, mu = float(lam), float(mu)
    if not (lam > 0.0 and mu > 0.0):
        raise DomainError(f"coefficients must be positive, got ({lam}, {mu})")
    if abs(lam + mu - 1.0) <= DEGENERACY_EPS:
        return 1.0
    if abs(abs(lam - mu) - 1.0) <= DEGENERACY_EPS:
        return -1.0
    return (1.0 - lam * lam - mu * mu) / (2.0 * lam * mu)


def _check_condition_a(lambdas: Sequence[float], convex_regime: bool) -> None:
    total = sum(lambdas)
    if total < 1.0 - DEGENERACY_EPS:
        raise DomainError(f"condition (A) fails: sum of coefficients {total} < 1")
    if not convex_regime:
        excess = 2.0 * max(lambdas) - total
        if excess > 1.0 + DEGENERACY_EPS:
            raise DomainError(
                f"condition (A) fails: 2 max(lambda) - sum(lambda) = {excess} > 1 "
                "(set convex_regime=True for convex data)")


def _check_functions(fs: Sequence[FunctionSpec], trivial_case: bool) -> int:
    dim = fs[0].dim
    if any(f.dim != dim for f in fs):
        raise DomainError("all functions must have the same dimension")
    if not trivial_case:
        for f in fs:
            if f.trivial_value() is not None:
                raise TrivialFunctionError(
                    f"{f!r} is a.e. constant 0 or 1; flag the instance with trivial_case=True")
    return dim


@dataclass(frozen=True)
class BorellInstance:
    lam: float
    mu: float
    f: FunctionSpec
    g: FunctionSpec
    h: FunctionSpec
    convex_regime: bool = False
    trivial_case: bool = False
    rho: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "mu", float(self.mu))
        if not (self.lam > 0.0 and self.mu > 0.0):
            raise DomainError(f"coefficients must be positive, got ({self.lam}, {self.mu})")
        _check_condition_a([self.lam, self.mu], self.convex_regime)
        _check_functions([self.f, self.g, self.h], self.trivial_case)
        object.__setattr__(self, "rho", rho(self.lam, self.mu))

    @property
    def dim(self) -> int:
        return self.f.dim

    @property
    def lambdas(self) -> tuple:
        return (self.lam, self.mu)

    @property
    def fs(self) -> tuple:
        return (self.f, self.g)

    @property
    def is_degenerate(self) -> bool:
        return abs(self.rho) == 1.0

    def to_minstance(self) -> "MInstance":
        if self.lam >= self.mu:
            return MInstance((self.lam, self.mu), (self.f, self.g), self.h, self.convex_regime, self.trivial_case)
        return MInstance((self.mu, self.lam), (self.g, self.f), self.h, self.convex_regime, self.trivial_case)


@dataclass(frozen=True)
class MInstance:
    """m-function instance with coefficients in descending order."""

    lambdas: tuple
    fs: tuple
    h: FunctionSpec
    convex_regime: bool = False
    trivial_case: bool = False

    def __post_init__(self):
        lams = tuple(float(v) for v in self.lambdas)
        object.__setattr__(self, "lambdas", lams)
        object.__setattr__(self, "fs", tuple(self.fs))
        if len(lams) < 2 or len(lams) != len(self.fs):
            raise DomainError("need m >= 2 coefficients, one per function")
        if any(not v > 0.0 for v in lams):
            raise DomainError("coefficients must be positive")
        if any(a < b for a, b in zip(lams[:-1], lams[1:])):
            raise DomainError("coefficients must be in descending order")
        _check_condition_a(lams, self.convex_regime)
        _check_functions((*self.fs, self.h), self.trivial_case)

    @property
    def dim(self) -> int:
        return self.h.dim

    @property
    def m(self) -> int:
        return len(self.lambdas)


def gaussian_quantile(f: FunctionSpec, order: int | None = None) -> float:
    """Phi^{-1}(integral of f against gamma_n), +-inf for trivial functions.

    ``order`` sets the Gauss-Hermite order where quadrature is needed.
    """
    return float(u_and_grad(f, 1.0, np.zeros((1, f.dim)), order=order)[0][0])


def deficit_m(inst: MInstance, order: int | None = None) -> ExtendedReal:
    lhs = gaussian_quantile(inst.h, order)
    rhs = ext_sum(ExtendedReal(gaussian_quantile(f, order)) * l for l, f in zip(inst.lambdas, inst.fs))
    return ExtendedReal(ext_gap(lhs, rhs))


def deficit(inst: BorellInstance, order: int | None = None) -> ExtendedReal:
    """Phi^{-1}(int h) - lambda Phi^{-1}(int f) - mu Phi^{-1}(int g) on the extended line."""
    lhs = gaussian_quantile(inst.h, order)
    rhs = ext_sum([ExtendedReal(gaussian_quantile(inst.f, order)) * inst.lam,
                   ExtendedReal(gaussian_quantile(inst.g, order)) * inst.mu])
    return ExtendedReal(ext_gap(lhs, rhs))


@dataclass(frozen=True)
class Fields:
    """u and grad u of f, g, h at (x, y), batched over rows."""

    uf: np.ndarray
    duf: np.ndarray
    ug: np.ndarray
    dug: np.ndarray
    uh: np.ndarray
    duh: np.ndarray

    def c(self, lam: float, mu: float) -> np.ndarray:
        return self.uh - lam * self.uf - mu * self.ug

    def drift(self) -> tuple[np.ndarray, np.ndarray]:
        b1 = -0.5 * self.uf[:, None] * (self.duh + self.duf)
        b2 = -0.5 * self.ug[:, None] * (self.duh + self.dug)
        return b1, b2


def _require_nontrivial(inst) -> None:
    fs = (inst.f, inst.g, inst.h)
    if any(f.trivial_value() is not None for f in fs):
        raise TrivialFunctionError("C and the drift need nontrivial f, g and h")


def fields(inst: BorellInstance, t: float, X: np.ndarray, Y: np.ndarray) -> Fields:
    """Evaluate all u's and gradients at heat time ``t`` for row-stacked points."""
    uf, duf = u_and_grad(inst.f, t, X)
    ug, dug = u_and_grad(inst.g, t, Y)
    uh, duh = u_and_grad(inst.h, t, inst.lam * X + inst.mu * Y)
    return Fields(uf, duf, ug, dug, uh, duh)


def _pair(inst, x, y):
    X = as_points(x, inst.dim)
    Y = as_points(y, inst.dim)
    if X.shape != Y.shape:
        raise DomainError("x and y must have matching shapes")
    single = X.shape[0] == 1 and np.ndim(x) <= 1 and np.ndim(y) <= 1
    return X, Y, single


def _check_time(t: float, upper_closed: bool) -> float:
    t = float(t)
    ok = 0.0 < t <= 1.0 if upper_closed else 0.0 < t < 1.0
    if not ok:
        raise DomainError(f"time {t} outside {'(0, 1]' if upper_closed else '(0, 1)'}")
    return t


def c_value(inst: BorellInstance, t: float, x, y):
    t = _check_time(t, True)
    _require_nontrivial(inst)
    X, Y, single = _pair(inst, x, y)
    c = fields(inst, t, X, Y).c(inst.lam, inst.mu)
    return float(c[0]) if single else c


def drift_b(inst: BorellInstance, t: float, x, y):
    """``(b1, b2)`` with ``b1 = -u_f (grad u_h + grad u_f) / 2`` and ``b2`` likewise for g."""
    t = _check_time(t, False)
    _require_nontrivial(inst)
    X, Y, single = _pair(inst, x, y)
    b1, b2 = fields(inst, t, X, Y).drift()
    if single:
        return b1[0], b2[0]
    return b1, b2


def pde_residual(inst: BorellInstance, t: float, x, y, dt: float = 1e-5, dx: float = 1e-3,
                 t_scheme: str = "forward"):
    """|C_t - (1/2 Delta_rho C + <b, grad C> - 1/2 |grad u_h|^2 C)| by finite differences.

    Spatial derivatives are central with step ``dx``. The time derivative is a
    forward difference by default, so the leading error is ``dt/2 * C_tt`` and
    halving ``dt`` halves the residual; ``t_scheme="central"`` is second order.
    """
    t, dt, dx = float(t), float(dt), float(dx)
    if dt <= 0.0 or dx <= 0.0:
        raise ConfigurationError("steps must be positive")
    if t_scheme not in ("forward", "central"):
        raise ConfigurationError(f"unknown time scheme {t_scheme!r}")
    if not (2.0 * dt <= t <= 1.0 - 2.0 * dt):
        raise ConfigurationError(f"t = {t} must stay at least 2*dt = {2 * dt} away from 0 and 1")
    _require_nontrivial(inst)
    X, Y, single = _pair(inst, x, y)
    n = inst.dim
    lam, mu, r = inst.lam, inst.mu, inst.rho

    def C(tt, XX, YY):
        return fields(inst, tt, XX, YY).c(lam, mu)

    base = fields(inst, t, X, Y)
    c0 = base.c(lam, mu)
    if t_scheme == "forward":
        ct = (C(t + dt, X, Y) - c0) / dt
    else:
        ct = (C(t + dt, X, Y) - C(t - dt, X, Y)) / (2.0 * dt)

    grad_x = np.empty_like(X)
    grad_y = np.empty_like(Y)
    lap = np.zeros(X.shape[0])
    for i in range(n):
        e = np.zeros(n)
        e[i] = dx
        cxp, cxm = C(t, X + e, Y), C(t, X - e, Y)
        cyp, cym = C(t, X, Y + e), C(t, X, Y - e)
        cxy = (C(t, X + e, Y + e) - C(t, X + e, Y - e) - C(t, X - e, Y + e) + C(t, X - e, Y - e)) / (4 * dx * dx)
        grad_x[:, i] = (cxp - cxm) / (2 * dx)
        grad_y[:, i] = (cyp - cym) / (2 * dx)
        lap += (cxp - 2 * c0 + cxm) / (dx * dx) + 2 * r * cxy + (cyp - 2 * c0 + cym) / (dx * dx)
    b1, b2 = base.drift()
    transport = np.sum(b1 * grad_x, axis=1) + np.sum(b2 * grad_y, axis=1)
    kill = 0.5 * np.sum(base.duh ** 2, axis=1) * c0
    res = np.abs(ct - (0.5 * lap + transport - kill))
    return float(res[0]) if single else res

