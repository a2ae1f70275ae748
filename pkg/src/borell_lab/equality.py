"""Equality cases: generators, a classifier, the trivial cases and the reduction transforms.

Families (coefficients lambda_1 >= ... >= lambda_m satisfying (A)):

* ``H1`` Gaussian ramps ``Phi(<a,x> + b_i)`` with ``b = sum lambda_i b_i``;
* ``H2`` parallel half-space indicators with the same offset relation;
* ``common_concave`` ``h = f_1 = ... = f_m = Phi(V)``, V concave, sum lambda = 1;
* ``reflection`` ``1 - h(-x) = 1 - f_1(-x) = f_2 = ... = f_m = Phi(V)``,
  lambda_1 - sum_{i>=2} lambda_i = 1;
* ``trivial`` at least one function a.e. 0 or 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np
from scipy.special import ndtr

from .borell import DEGENERACY_EPS, BorellInstance, MInstance, deficit, deficit_m
from .errors import (
    ConstructionError,
    DomainError,
    RegimeError,
    UnsupportedGeometryError,
    UnsupportedRepresentationError,
)
from .functions import (
    Complement,
    ConcaveComposite,
    ConcavePWL,
    Constant,
    FunctionSpec,
    GridSampled,
    HalfspaceIndicator,
    LinearGaussian,
    Reflect,
    hypothesis_b_check,
)
from .gaussian import ext_gap
from .heat import u_and_grad

__all__ = [
    "FAMILIES",
    "EqualityVerdict",
    "ConditionA",
    "FeasibleMu",
    "make_equality_instance",
    "classify_equality",
    "trivial_case_verdict",
    "condition_a_check",
    "feasible_mu",
    "dual_transform",
    "convex_rescale",
    "sup_convolution",
    "random_equality_params",
    "strict_fixtures",
    "convex_regime_fixtures",
    "regime_of",
]

FAMILIES = ("H1", "H2", "common_concave", "reflection", "trivial")
LABELS = FAMILIES + ("strict", "unclassified")

Instance = Union[BorellInstance, MInstance]

FIT_TIME = 0.5
DEFICIT_TOL = 1e-8
GRID_DEFICIT_TOL = 1e-5
RESIDUAL_TOL = 1e-6


# --- coefficients -----------------------------------------------------------


@dataclass(frozen=True)
class ConditionA:
    holds: bool
    convex_regime_holds: bool


def condition_a_check(lambdas: Sequence[float]) -> ConditionA:
    """(A): sum lambda_i >= 1 and 2 max lambda_i <= 1 + sum lambda_i."""
    lams = [float(v) for v in lambdas]
    if not lams or any(not v > 0.0 for v in lams):
        raise DomainError("coefficients must be positive")
    total = sum(lams)
    first = total >= 1.0 - DEGENERACY_EPS
    second = 2.0 * max(lams) - total <= 1.0 + DEGENERACY_EPS
    return ConditionA(first and second, first)


def regime_of(lambdas: Sequence[float]) -> str:
    """One of ``sum_one``, ``diff_one``, ``convex`` or ``nondegenerate``."""
    lams = sorted((float(v) for v in lambdas), reverse=True)
    total = sum(lams)
    if abs(total - 1.0) <= DEGENERACY_EPS:
        return "sum_one"
    diff = lams[0] - (total - lams[0])
    if abs(diff - 1.0) <= DEGENERACY_EPS:
        return "diff_one"
    if diff > 1.0:
        return "convex"
    return "nondegenerate"


@dataclass(frozen=True)
class FeasibleMu:
    lam: float
    mu: float
    lambdas_tilde: tuple

    @property
    def pair_ok(self) -> bool:
        return (self.lam + self.mu >= 1.0 - DEGENERACY_EPS
                and abs(self.lam - self.mu) <= 1.0 + DEGENERACY_EPS)

    @property
    def tail_ok(self) -> bool:
        lt = sorted(self.lambdas_tilde, reverse=True)
        total = sum(lt)
        excess = lt[0] - (total - lt[0])
        # a single remaining coefficient is exactly 1, which (A) allows
        second = excess <= 1.0 + DEGENERACY_EPS if len(lt) == 1 else excess < 1.0
        return total >= 1.0 - DEGENERACY_EPS and second


def feasible_mu(lambdas: Sequence[float]) -> FeasibleMu:
    """Split (lambda_1, ..., lambda_m) into (lambda_1, mu) and lambda_i / mu, i >= 2.

    ``mu = min(1 + lambda_1, sum_{i>=2} lambda_i)``; both resulting families
    satisfy (A).
    """
    lams = [float(v) for v in lambdas]
    if len(lams) < 2:
        raise DomainError("need at least two coefficients")
    if not condition_a_check(lams).holds:
        raise DomainError(f"condition (A) fails for {lams}")
    if lams[0] < max(lams):
        raise DomainError("the first coefficient must be the largest")
    tail = lams[1:]
    mu = min(1.0 + lams[0], sum(tail))
    return FeasibleMu(lams[0], mu, tuple(v / mu for v in tail))


# --- trivial cases ----------------------------------------------------------


def trivial_case_verdict(lambdas: Sequence[float], fs: Sequence[FunctionSpec], h: FunctionSpec) -> bool:
    """Whether equality holds when some function is a.e. 0 or 1.

    Equality iff h = 1 with some f_i = 1 and no f_i = 0, or h = 0 with some f_i = 0.
    """
    if len(lambdas) != len(fs):
        raise DomainError("one coefficient per function is required")
    tf = [f.trivial_value() for f in fs]
    th = h.trivial_value()
    if th is None and all(v is None for v in tf):
        raise DomainError("no trivial function present; the trivial-case rule does not apply")
    if th == 1:
        return any(v == 1 for v in tf) and not any(v == 0 for v in tf)
    if th == 0:
        return any(v == 0 for v in tf)
    return False


# --- generators -------------------------------------------------------------


def _coeffs(params: Mapping) -> tuple:
    if "lambdas" in params:
        lams = tuple(float(v) for v in params["lambdas"])
    else:
        lams = (float(params["lam"]), float(params["mu"]))
    if len(lams) < 2 or any(not v > 0.0 for v in lams):
        raise ConstructionError("need at least two positive coefficients")
    return lams


def _package(lams, fs, h, convex_regime=False, trivial_case=False, as_pair=None) -> Instance:
    if len(lams) == 2 and as_pair is not False:
        return BorellInstance(lams[0], lams[1], fs[0], fs[1], h, convex_regime, trivial_case)
    order = sorted(range(len(lams)), key=lambda i: -lams[i])
    return MInstance(tuple(lams[i] for i in order), tuple(fs[i] for i in order), h, convex_regime, trivial_case)


def _grid_of(f: FunctionSpec, radius: float = 8.0, n: int = 1601) -> GridSampled:
    if f.dim != 1:
        raise UnsupportedGeometryError("grid representations are generated in one dimension")
    xs = np.linspace(-radius, radius, n)
    return GridSampled((-radius,), (radius,), f.quantile(xs[:, None]), scale="quantile")


def make_equality_instance(case: str, params: Mapping) -> Instance:
    """Build an instance of the named equality family.

    ``params`` holds ``lambdas`` (or ``lam``/``mu``) plus, per family:
    ``a`` and ``bs`` for H1/H2; ``V`` (a ConcavePWL) for the concave
    families, optionally ``representation="grid"`` in one dimension;
    ``branch`` ("one" or "zero"), ``dim`` and optionally ``others`` for trivial.
    Two coefficients give a BorellInstance, more give an MInstance.
    """
    lams = _coeffs(params)
    cond = condition_a_check(lams)
    if not cond.convex_regime_holds:
        raise ConstructionError(f"coefficients {lams} violate sum >= 1")
    if case in ("H1", "H2"):
        a = np.atleast_1d(np.asarray(params["a"], dtype=float))
        bs = [float(v) for v in params["bs"]]
        if len(bs) != len(lams):
            raise ConstructionError("need one offset b_i per coefficient")
        if case == "H2" and not np.any(a != 0.0):
            raise ConstructionError("H2 needs a nonzero normal a")
        b = math.fsum(l * v for l, v in zip(lams, bs))
        kind = LinearGaussian if case == "H1" else HalfspaceIndicator
        fs = [kind(a, v) for v in bs]
        return _package(lams, fs, kind(a, b), convex_regime=not cond.holds)
    if case in ("common_concave", "reflection"):
        if not cond.holds:
            raise ConstructionError(f"{case} needs condition (A), got {lams}")
        V = params["V"]
        if not isinstance(V, ConcavePWL):
            raise ConstructionError("V must be a ConcavePWL")
        base: FunctionSpec = ConcaveComposite(V)
        if params.get("representation", "symbolic") == "grid":
            base = _grid_of(base)
        regime = regime_of(lams)
        if case == "common_concave":
            if regime != "sum_one":
                raise ConstructionError(f"common_concave needs sum lambda = 1, got sum {sum(lams)}")
            return _package(lams, [base] * len(lams), base)
        if regime != "diff_one":
            raise ConstructionError("reflection needs lambda_1 - sum_{i>=2} lambda_i = 1")
        top = int(np.argmax(lams))
        mirrored = Complement(Reflect(base))
        fs = [mirrored if i == top else base for i in range(len(lams))]
        return _package(lams, fs, mirrored)
    if case == "trivial":
        branch = params.get("branch", "one")
        dim = int(params.get("dim", 1))
        others = list(params.get("others", [LinearGaussian([0.5] * dim, 0.2)] * (len(lams) - 1)))
        if len(others) != len(lams) - 1:
            raise ConstructionError("need one function per remaining coefficient")
        if branch == "one":
            h, f1 = Constant(1.0, dim), Constant(1.0, dim)
        elif branch == "zero":
            h, f1 = Constant(0.0, dim), Constant(0.0, dim)
        else:
            raise ConstructionError(f"unknown trivial branch {branch!r}")
        return _package(lams, [f1] + others, h, convex_regime=not cond.holds, trivial_case=True)
    raise ConstructionError(f"unknown equality family {case!r}")


# --- classifier -------------------------------------------------------------


@dataclass(frozen=True)
class EqualityVerdict:
    case_label: str
    deficit: float
    residuals: dict = field(default_factory=dict)
    regime: str = "nondegenerate"
    equality: bool = False

    def to_dict(self) -> dict:
        def enc(v):
            v = float(v)
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")
        return {"case_label": self.case_label, "deficit": enc(self.deficit),
                "residuals": {k: enc(v) for k, v in self.residuals.items()},
                "regime": self.regime, "equality": self.equality}


def _parts(inst: Instance):
    if isinstance(inst, BorellInstance):
        return [inst.lam, inst.mu], [inst.f, inst.g], inst.h
    return list(inst.lambdas), list(inst.fs), inst.h


def _probe_points(dim: int, per_axis: int, radius: float) -> np.ndarray:
    ax = np.linspace(-radius, radius, per_axis)
    return np.array(list(itertools.product(ax, repeat=dim)), dtype=float)


def _affine_fit(f: FunctionSpec, pts: np.ndarray, t: float):
    u = u_and_grad(f, t, pts)[0]
    design = np.hstack([pts, np.ones((pts.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(design, u, rcond=None)
    resid = float(np.max(np.abs(design @ coef - u)))
    return coef[:-1], float(coef[-1]), resid


def _family_fit(lams, fs, h, pts, t, halfspace: bool) -> float:
    """Worst residual of the H1 (or H2) description, fitted on u at time t."""
    fits = [_affine_fit(f, pts, t) for f in [h] + list(fs)]
    worst = max(r for _, _, r in fits)
    limit = 1.0 / math.sqrt(t)
    slopes = [a for a, _, _ in fits]
    norms = [float(np.linalg.norm(a)) for a in slopes]
    if halfspace:
        worst = max(worst, max(abs(nrm / limit - 1.0) for nrm in norms))
        # the inverse of Q_t is a half-space with the fitted (normalised) coefficients
        a0 = slopes[0]
        offs = [b for _, b, _ in fits]
    else:
        if max(norms) >= limit * (1.0 - 1e-9):
            return math.inf
        scale = [math.sqrt(1.0 - t * nrm * nrm) for nrm in norms]
        slopes = [a / s for a, s in zip(slopes, scale)]
        a0 = slopes[0]
        offs = [b / s for (_, b, _), s in zip(fits, scale)]
    worst = max(worst, max(float(np.max(np.abs(a - a0))) for a in slopes))
    worst = max(worst, abs(offs[0] - math.fsum(l * b for l, b in zip(lams, offs[1:]))))
    return worst


def _identity_residual(p: FunctionSpec, q: FunctionSpec, pts: np.ndarray, mirror: bool = False) -> float:
    """max |Phi^{-1} p(x) - Phi^{-1} q(x)|, or against 1 - q(-x) when ``mirror``."""
    a = p.quantile(pts)
    b = -q.quantile(-pts) if mirror else q.quantile(pts)
    return float(np.max(np.abs(ext_gap(a, b))))


def _concavity_residual(f: FunctionSpec, pts: np.ndarray) -> float:
    """0 when concavity is structural, else the worst sampled midpoint violation."""
    if f.concave_quantile:
        return 0.0
    rng = np.random.Generator(np.random.Philox(key=11))
    i = rng.integers(0, pts.shape[0], 400)
    j = rng.integers(0, pts.shape[0], 400)
    mid = f.quantile(0.5 * (pts[i] + pts[j]))
    ends = 0.5 * f.quantile(pts[i]) + 0.5 * f.quantile(pts[j])
    gap = np.asarray(ext_gap(mid, ends))
    return float(max(0.0, -np.min(gap)))


def _is_grid(fs) -> bool:
    def grid(f):
        if isinstance(f, GridSampled):
            return True
        base = getattr(f, "base", None)
        return base is not None and grid(base)
    return any(grid(f) for f in fs)


def classify_equality(inst: Instance, tol: float | None = None,
                      residual_tol: float = RESIDUAL_TOL) -> EqualityVerdict:
    """Place an instance in the equality taxonomy.

    Trivial inputs follow the trivial-case rule. Otherwise an instance with
    deficit above ``tol`` is strict; below it, the H1/H2 descriptions are
    fitted on u at time 0.5 and the identity families are checked pointwise
    on a probe grid. ``unclassified`` means no family fits (or the deficit
    is negative, which signals that (B) fails).
    """
    lams, fs, h = _parts(inst)
    allf = [h] + fs
    if tol is None:
        tol = GRID_DEFICIT_TOL if _is_grid(allf) else DEFICIT_TOL
    regime = regime_of(lams)
    d = float(deficit(inst) if isinstance(inst, BorellInstance) else deficit_m(inst))
    if any(f.trivial_value() is not None for f in allf):
        eq = trivial_case_verdict(lams, fs, h)
        if eq:
            return EqualityVerdict("trivial", d, {}, regime, True)
        return EqualityVerdict("strict" if d > tol else "unclassified", d, {}, regime, False)
    if d > tol:
        return EqualityVerdict("strict", d, {}, regime, False)
    if d < -tol:
        return EqualityVerdict("unclassified", d, {}, regime, False)

    dim = h.dim
    fit_pts = _probe_points(dim, {1: 9, 2: 5}.get(dim, 3), 1.5)
    id_pts = _probe_points(dim, {1: 161, 2: 25}.get(dim, 9), 3.0)
    residuals = {
        "H1": _family_fit(lams, fs, h, fit_pts, FIT_TIME, halfspace=False),
        "H2": _family_fit(lams, fs, h, fit_pts, FIT_TIME, halfspace=True),
    }
    if regime == "sum_one":
        residuals["common_concave"] = max(
            max(_identity_residual(f, h, id_pts) for f in fs),
            max(_concavity_residual(f, id_pts) for f in allf))
    if regime == "diff_one":
        top = int(np.argmax(lams))
        f1 = fs[top]
        rest = [f for i, f in enumerate(fs) if i != top]
        residuals["reflection"] = max(
            _identity_residual(h, f1, id_pts),
            max(_identity_residual(f, f1, id_pts, mirror=True) for f in rest),
            max(_concavity_residual(f, id_pts) for f in rest))
    for label in ("H1", "H2", "common_concave", "reflection"):
        if residuals.get(label, math.inf) <= residual_tol:
            return EqualityVerdict(label, d, residuals, regime, True)
    return EqualityVerdict("unclassified", d, residuals, regime, False)


# --- reductions -------------------------------------------------------------


def dual_transform(inst: BorellInstance) -> BorellInstance:
    """Map an instance with lambda = 1 + mu to the dual sum-one instance.

    ``lambda~ = mu / lambda``, ``mu~ = 1 / lambda``, ``h~ = 1 - f``,
    ``f~ = g(-.)``, ``g~ = 1 - h``; then ``deficit(dual) = deficit / lambda``.
    """
    if abs(inst.lam - (1.0 + inst.mu)) > DEGENERACY_EPS:
        raise RegimeError(f"dual transform needs lambda = 1 + mu, got ({inst.lam}, {inst.mu})")
    mu_t = 1.0 / inst.lam
    lam_t = 1.0 - mu_t  # equals mu / lambda under the precondition, and sums to 1 exactly
    return BorellInstance(lam_t, mu_t, Reflect(inst.g), Complement(inst.h), Complement(inst.f),
                          trivial_case=inst.trivial_case)


def convex_rescale(h: FunctionSpec, lam: float) -> FunctionSpec:
    """h~ with Phi^{-1} h~(x) = Phi^{-1} h(lam x) / lam, for concave symbolic h and lam >= 1."""
    lam = float(lam)
    if not lam >= 1.0:
        raise DomainError(f"rescaling needs lambda >= 1, got {lam}")
    if lam == 1.0:
        return h
    if isinstance(h, LinearGaussian):
        return LinearGaussian(h.a, h.b / lam)
    if isinstance(h, ConcaveComposite):
        return ConcaveComposite(h.V.scaled(lam))
    if isinstance(h, HalfspaceIndicator):
        return HalfspaceIndicator(h.a, h.b / lam)
    if isinstance(h, Constant):
        if h.trivial_value() is not None:
            return h
        return Constant(float(ndtr(float(np.asarray(h.quantile(np.zeros((1, h.dim))))[0]) / lam)), h.dim)
    raise UnsupportedRepresentationError(
        f"convex_rescale needs a symbolic concave representation, got {type(h).__name__}")


# +inf cannot be stored in a quantile grid; Phi(40) is 1 in double precision
_QUANTILE_CAP = 40.0


def sup_convolution(fs: Sequence[FunctionSpec], lambdas_tilde: Sequence[float], grid=None,
                    radius: float = 6.0, n_search: int | None = None, n_refine: int = 21,
                    with_bound: bool = False):
    """Grid approximation of the sup-convolution collapsing f_2, ..., f_m into one function.

    ``Phi^{-1} h~(x) = sup_z lambda_2 Phi^{-1} f_2((x - sum_{i>=3} lambda_i z_i) / lambda_2)
    + sum_{i>=3} lambda_i Phi^{-1} f_i(z_i)`` with ``fs = (f_2, ..., f_m)``. The
    supremum runs over ``[-radius, radius]^(m-2)``: a coarse grid search
    followed by one local refinement. The result is a quantile-scale
    GridSampled on ``grid`` (default 121 points on ``[-radius, radius]``).
    With ``with_bound=True`` a resolution estimate is returned as well.
    """
    if not fs:
        raise DomainError("sup_convolution needs at least one function")
    if len(fs) < 2:
        raise DomainError("sup_convolution needs at least two functions")
    if len(fs) != len(lambdas_tilde):
        raise DomainError("one coefficient per function is required")
    if any(f.dim != 1 for f in fs):
        raise UnsupportedGeometryError("sup_convolution is implemented for one-dimensional functions")
    lt = np.asarray(lambdas_tilde, dtype=float)
    if np.any(lt <= 0.0):
        raise DomainError("coefficients must be positive")
    xs = np.linspace(-radius, radius, 121) if grid is None else np.asarray(grid, dtype=float)
    if not _uniform(xs):
        raise DomainError("grid must be uniformly spaced")
    d = len(fs) - 1
    if n_search is None:
        n_search = {1: 241, 2: 81}.get(d, 21)
    head, rest = fs[0], fs[1:]

    def objective(x, Z):
        # x: (P,), Z: (P, K, d) -> (P, K)
        shift = np.tensordot(Z, lt[1:], axes=([2], [0]))
        arg = (x[:, None] - shift) / lt[0]
        val = lt[0] * head.quantile(arg.reshape(-1, 1)).reshape(arg.shape)
        for k, f in enumerate(rest):
            zk = Z[:, :, k]
            val = _ext_add(val, lt[k + 1] * f.quantile(zk.reshape(-1, 1)).reshape(zk.shape))
        return val

    axis = np.linspace(-radius, radius, n_search)
    coarse_nodes = np.array(list(itertools.product(axis, repeat=d)))
    P = xs.shape[0]
    Z = np.broadcast_to(coarse_nodes, (P,) + coarse_nodes.shape)
    vals = objective(xs, Z)
    best = np.argmax(vals, axis=1)
    coarse = vals[np.arange(P), best]
    centre = coarse_nodes[best]
    step = axis[1] - axis[0]
    local = np.linspace(-step, step, n_refine)
    offsets = np.array(list(itertools.product(local, repeat=d)))
    Zr = np.clip(centre[:, None, :] + offsets[None, :, :], -radius, radius)
    refined = np.max(objective(xs, Zr), axis=1)
    out = np.maximum(coarse, refined)
    out = np.minimum(out, _QUANTILE_CAP)
    spec = GridSampled((float(xs[0]),), (float(xs[-1]),), out, scale="quantile")
    if not with_bound:
        return spec
    finite = np.isfinite(out)
    gain = np.where(finite & np.isfinite(coarse), out - coarse, 0.0)
    curv = np.abs(np.diff(np.where(finite, out, 0.0), 2)) if P > 2 else np.zeros(1)
    bound = 2.0 * float(np.max(gain)) + float(np.max(curv)) / 8.0 + 1e-9
    return spec, bound


def _uniform(xs: np.ndarray) -> bool:
    dx = np.diff(xs)
    return xs.ndim == 1 and xs.size >= 2 and np.allclose(dx, dx[0], rtol=1e-9, atol=0.0)


def _ext_add(a, b):
    with np.errstate(invalid="ignore"):
        s = a + b
    return np.where((a == -np.inf) | (b == -np.inf), -np.inf, s)


# --- fixtures ---------------------------------------------------------------


def _random_lambdas(rng: np.random.Generator, m: int, regime: str) -> list[float]:
    if regime == "sum_one":
        w = np.sort(rng.dirichlet(np.full(m, 2.0)))[::-1]
        lams = list(w[:-1]) + [1.0 - float(np.sum(w[:-1]))]
        return [float(v) for v in lams]
    if regime == "diff_one":
        tail = np.sort(rng.uniform(0.2, 1.0, m - 1))[::-1]
        return [1.0 + float(np.sum(tail))] + [float(v) for v in tail]
    while True:
        lams = np.sort(rng.uniform(0.2, 1.4, m))[::-1]
        if condition_a_check(lams).holds and regime_of(lams) == "nondegenerate":
            return [float(v) for v in lams]


def _random_v(rng: np.random.Generator, dim: int) -> ConcavePWL:
    k = int(rng.integers(2, 5))
    slopes = rng.normal(0.0, 0.9, (k, dim))
    offsets = rng.normal(0.3, 0.15, k)
    # two pieces with clearly different slopes meet at the origin, so V is never affine
    step = rng.normal(0.0, 1.0, dim)
    slopes[1] = slopes[0] + rng.uniform(0.5, 1.5) * step / np.linalg.norm(step)
    offsets[1] = offsets[0]
    offsets[2:] = np.maximum(offsets[2:], offsets[0])
    if rng.random() < 0.3:
        lo = -rng.uniform(1.0, 3.0, dim)
        hi = rng.uniform(1.0, 3.0, dim)
        return ConcavePWL(slopes, offsets, lo, hi)
    return ConcavePWL(slopes, offsets)


def random_equality_params(case: str, rng: np.random.Generator, dim: int = 1, m: int = 2) -> dict:
    """Random parameters for ``make_equality_instance(case, ...)``."""
    if case in ("H1", "H2"):
        a = rng.normal(0.0, 1.0, dim)
        while np.linalg.norm(a) < 0.2:
            a = rng.normal(0.0, 1.0, dim)
        return {"lambdas": _random_lambdas(rng, m, "nondegenerate"), "a": a, "bs": rng.normal(0.0, 0.7, m)}
    if case == "common_concave":
        return {"lambdas": _random_lambdas(rng, m, "sum_one"), "V": _random_v(rng, dim)}
    if case == "reflection":
        return {"lambdas": _random_lambdas(rng, m, "diff_one"), "V": _random_v(rng, dim)}
    if case == "trivial":
        others = [LinearGaussian(rng.normal(0.0, 1.0, dim), float(rng.normal())) for _ in range(m - 1)]
        return {"lambdas": _random_lambdas(rng, m, "nondegenerate"), "branch": str(rng.choice(["one", "zero"])),
                "dim": dim, "others": others}
    raise ConstructionError(f"unknown equality family {case!r}")


def strict_fixtures() -> list[tuple[str, BorellInstance]]:
    """Instances satisfying (B) with a strictly positive deficit."""
    from .functions import Box, BoxIndicator, IntervalIndicator, IntervalUnion, minkowski_combine, set_to_indicator

    def sets(A, B, lam, mu, **kw):
        h = set_to_indicator(minkowski_combine([A, B], [lam, mu]))
        return BorellInstance(lam, mu, set_to_indicator(A), set_to_indicator(B), h, **kw)

    I = IntervalUnion([(-1.0, 1.0)])
    V = ConcavePWL([[1.0], [-0.7]], [0.2, 0.1])
    V_up = ConcavePWL([[1.0], [-0.7]], [0.4, 0.3])
    W = ConcavePWL([[0.8], [-1.2], [0.1]], [-0.1, -0.3, -0.2])
    return [
        ("interval_0.7", sets(I, I, 0.7, 0.7)),
        ("interval_shifted", sets(I, IntervalUnion([(-0.5, 2.0)]), 0.6, 0.6)),
        ("interval_union", sets(IntervalUnion([(-2.0, -1.0), (1.0, 2.0)]), I, 0.6, 0.6)),
        ("interval_diff_one", sets(I, I, 1.5, 0.5)),
        ("box_2d", sets(Box([-1, -1], [1, 1]), Box([-1, -1], [1, 1]), 0.7, 0.7)),
        ("box_3d", sets(Box([-1] * 3, [1] * 3), Box([-0.5] * 3, [1.5] * 3), 0.8, 0.5)),
        ("h1_offset_perturbed", BorellInstance(0.6, 0.6, LinearGaussian([1.0], 0.3), LinearGaussian([1.0], -0.1),
                                               LinearGaussian([1.0], 0.22))),
        ("h1_2d_offset_perturbed", BorellInstance(0.9, 0.4, LinearGaussian([0.5, -1.0], 0.2),
                                                  LinearGaussian([0.5, -1.0], -0.4),
                                                  LinearGaussian([0.5, -1.0], 0.32))),
        ("concave_lifted_h", BorellInstance(0.5, 0.5, ConcaveComposite(V), ConcaveComposite(V),
                                            ConcaveComposite(V_up))),
        ("concave_convex_regime", BorellInstance(0.8, 0.8, ConcaveComposite(W), ConcaveComposite(W),
                                                 ConcaveComposite(W))),
        ("box_indicator_1d_vs_interval", BorellInstance(0.7, 0.7, BoxIndicator([-1.0], [1.0]),
                                                        IntervalIndicator([(-1.0, 1.0)]),
                                                        BoxIndicator([-1.4], [1.4]))),
    ]


def convex_regime_fixtures(count: int = 10, seed: int = 3) -> list[BorellInstance]:
    """Common concave composites Phi(V) with all offsets <= 0 and lambda + mu > 1.

    Nonpositive offsets give V(s w) >= s V(w) for s >= 1, so (B) holds, while
    the instance is neither H1 nor H2; the deficit is (1 - s) Phi^{-1}(int Phi(V)) > 0.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    out = []
    while len(out) < count:
        k = int(rng.integers(2, 4))
        V = ConcavePWL(rng.normal(0.0, 1.0, (k, 1)), -rng.uniform(0.05, 0.8, k))
        lam, mu = rng.uniform(0.55, 2.5, 2)
        if lam + mu <= 1.05:
            continue
        f = ConcaveComposite(V)
        convex = not condition_a_check([lam, mu]).holds
        out.append(BorellInstance(float(lam), float(mu), f, f, f, convex_regime=convex))
    return out


def b_holds(inst: Instance, samples: int = 2000, seed: int = 0, tol: float = 1e-10) -> bool:
    lams, fs, h = _parts(inst)
    return hypothesis_b_check(h, fs, lams, samples=samples, seed=seed, tol=tol).max_violation >= -tol
