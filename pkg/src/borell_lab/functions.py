"""Measurable functions R^n -> [0,1], Gaussian sets, and their algebra.

Every function carries its own Phi^{-1} representation so that indicator
values map to exact +-inf and Gaussian ramps map to exact affine values,
with no float round trip through (0, 1).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigurationError, DomainError, UnsupportedGeometryError
from .gaussian import ext_gap, ext_sum_array

__all__ = [
    "FunctionSpec",
    "LinearGaussian",
    "HalfspaceIndicator",
    "ConcavePWL",
    "ConcaveComposite",
    "IntervalIndicator",
    "BoxIndicator",
    "Constant",
    "GridSampled",
    "Complement",
    "Reflect",
    "Halfspace",
    "IntervalUnion",
    "Box",
    "evaluate",
    "phi_inverse_of",
    "hypothesis_b_check",
    "HypothesisBReport",
    "minkowski_combine",
    "set_to_indicator",
    "spec_from_dict",
    "set_from_dict",
]


def as_points(x, dim: int) -> np.ndarray:
    """Coerce a point or batch of points to shape (N, dim)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 and arr.shape[0] != 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DomainError(f"expected points of dimension {dim}, got shape {np.shape(x)}")
    return arr


def _vec(a) -> tuple:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(a, dtype=float)))


def _norm(a: Sequence[float]) -> float:
    return math.sqrt(sum(v * v for v in a))


class FunctionSpec:
    """Base class. Subclasses implement ``_quantile`` or ``_evaluate`` on (N, dim) arrays."""

    dim: int

    def evaluate(self, x) -> np.ndarray:
        pts = as_points(x, self.dim)
        return self._evaluate(pts)

    def quantile(self, x) -> np.ndarray:
        pts = as_points(x, self.dim)
        return self._quantile(pts)

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        return ndtr(self._quantile(pts))

    def _quantile(self, pts: np.ndarray) -> np.ndarray:
        return ndtri(np.clip(self._evaluate(pts), 0.0, 1.0))

    def trivial_value(self) -> Optional[int]:
        """0 or 1 if the function is a.e. that constant, else None."""
        return None

    @property
    def concave_quantile(self) -> Optional[bool]:
        """Whether Phi^{-1} of the function is concave, when the representation decides it."""
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class LinearGaussian(FunctionSpec):
    """x -> Phi(<a, x> + b)."""

    a: tuple
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _vec(self.a))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return len(self.a)

    def _quantile(self, pts):
        return pts @ np.asarray(self.a) + self.b

    @property
    def concave_quantile(self):
        return True

    def to_dict(self):
        return {"type": "linear_gaussian", "a": list(self.a), "b": self.b}


@dataclass(frozen=True)
class HalfspaceIndicator(FunctionSpec):
    """x -> 1{<a, x> + b >= 0}."""

    a: tuple
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _vec(self.a))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return len(self.a)

    def _quantile(self, pts):
        s = pts @ np.asarray(self.a) + self.b
        return np.where(s >= 0.0, np.inf, -np.inf)

    def _evaluate(self, pts):
        return (pts @ np.asarray(self.a) + self.b >= 0.0).astype(float)

    def trivial_value(self):
        if _norm(self.a) == 0.0:
            return 1 if self.b >= 0 else 0
        return None

    @property
    def concave_quantile(self):
        return True

    def to_dict(self):
        return {"type": "halfspace_indicator", "a": list(self.a), "b": self.b}


@dataclass(frozen=True)
class ConcavePWL:
    """Pointwise minimum of affine pieces, -inf outside an optional closed box."""

    slopes: tuple
    offsets: tuple
    lower: Optional[tuple] = None
    upper: Optional[tuple] = None

    def __post_init__(self):
        slopes = np.atleast_2d(np.asarray(self.slopes, dtype=float))
        offsets = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if slopes.shape[0] == 0 or slopes.shape[0] != offsets.shape[0]:
            raise DomainError("ConcavePWL needs at least one piece and one offset per slope")
        object.__setattr__(self, "slopes", tuple(tuple(float(v) for v in row) for row in slopes))
        object.__setattr__(self, "offsets", tuple(float(v) for v in offsets))
        n = slopes.shape[1]
        if (self.lower is None) != (self.upper is None):
            lo = (-math.inf,) * n if self.lower is None else _vec(self.lower)
            hi = (math.inf,) * n if self.upper is None else _vec(self.upper)
        elif self.lower is None:
            lo = hi = None
        else:
            lo, hi = _vec(self.lower), _vec(self.upper)
        if lo is not None:
            if len(lo) != n or len(hi) != n or any(l >= h for l, h in zip(lo, hi)):
                raise DomainError("effective-domain box must have positive width in every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.slopes[0])

    @property
    def slope_array(self) -> np.ndarray:
        return np.asarray(self.slopes)

    @property
    def offset_array(self) -> np.ndarray:
        return np.asarray(self.offsets)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        vals = np.min(pts @ self.slope_array.T + self.offset_array, axis=1)
        if self.lower is not None:
            inside = np.all((pts >= np.asarray(self.lower)) & (pts <= np.asarray(self.upper)), axis=1)
            vals = np.where(inside, vals, -np.inf)
        return vals

    def scaled(self, lam: float) -> "ConcavePWL":
        """x -> V(lam * x) / lam."""
        lo = None if self.lower is None else tuple(v / lam for v in self.lower)
        hi = None if self.upper is None else tuple(v / lam for v in self.upper)
        return ConcavePWL(self.slopes, tuple(o / lam for o in self.offsets), lo, hi)

    def segments_1d(self) -> list[tuple[float, float, float, float]]:
        """Active pieces of a 1-D function as (left, right, slope, offset), left to right."""
        if self.dim != 1:
            raise UnsupportedGeometryError("segments are only defined in one dimension")
        s = np.asarray([row[0] for row in self.slopes])
        o = self.offset_array
        lo = -math.inf if self.lower is None else self.lower[0]
        hi = math.inf if self.upper is None else self.upper[0]
        cuts = {lo, hi}
        for i, j in itertools.combinations(range(len(s)), 2):
            if s[i] != s[j]:
                xc = (o[j] - o[i]) / (s[i] - s[j])
                if lo < xc < hi:
                    cuts.add(float(xc))
        cuts = sorted(cuts)
        segs: list[list[float]] = []
        for left, right in zip(cuts[:-1], cuts[1:]):
            if math.isinf(left) and math.isinf(right):
                probe = 0.0
            elif math.isinf(left):
                probe = right - 1.0
            elif math.isinf(right):
                probe = left + 1.0
            else:
                probe = 0.5 * (left + right)
            k = int(np.argmin(s * probe + o))
            if segs and segs[-1][2] == s[k] and segs[-1][3] == o[k]:
                segs[-1][1] = right
            else:
                segs.append([left, right, float(s[k]), float(o[k])])
        return [tuple(seg) for seg in segs]

    def to_dict(self):
        d = {"slopes": [list(r) for r in self.slopes], "offsets": list(self.offsets)}
        if self.lower is not None:
            d["lower"] = [v if math.isfinite(v) else str(v) for v in self.lower]
            d["upper"] = [v if math.isfinite(v) else str(v) for v in self.upper]
        return d


@dataclass(frozen=True)
class ConcaveComposite(FunctionSpec):
    """x -> Phi(V(x)) for a concave piecewise-linear V."""

    V: ConcavePWL

    @property
    def dim(self) -> int:
        return self.V.dim

    def _quantile(self, pts):
        return self.V(pts)

    @property
    def concave_quantile(self):
        return True

    def to_dict(self):
        return {"type": "concave_composite", "V": self.V.to_dict()}


def _merge_intervals(intervals) -> tuple:
    ivs = sorted((float(a), float(b)) for a, b in intervals)
    merged: list[list[float]] = []
    for a, b in ivs:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


@dataclass(frozen=True)
class IntervalIndicator(FunctionSpec):
    """Indicator of a finite union of disjoint closed intervals on the line."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if not a < b:
                raise DomainError(f"interval [{a}, {b}] must have positive length")
        ivs = tuple(sorted(ivs))
        for (_, b0), (a1, _) in zip(ivs[:-1], ivs[1:]):
            if a1 <= b0:
                raise DomainError("intervals must be pairwise disjoint")
        object.__setattr__(self, "intervals", ivs)

    dim = 1

    def _evaluate(self, pts):
        x = pts[:, 0]
        out = np.zeros_like(x)
        for a, b in self.intervals:
            out[(x >= a) & (x <= b)] = 1.0
        return out

    def _quantile(self, pts):
        return np.where(self._evaluate(pts) > 0.5, np.inf, -np.inf)

    def trivial_value(self):
        if not self.intervals:
            return 0
        if self.intervals == ((-math.inf, math.inf),):
            return 1
        return None

    @property
    def concave_quantile(self):
        return len(self.intervals) <= 1

    def to_dict(self):
        return {"type": "interval_indicator", "intervals": [[_jsonable(a), _jsonable(b)] for a, b in self.intervals]}


@dataclass(frozen=True)
class BoxIndicator(FunctionSpec):
    """Indicator of a closed axis-aligned box (any dimension)."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo, hi = _vec(self.lower), _vec(self.upper)
        if len(lo) != len(hi) or any(not l < h for l, h in zip(lo, hi)):
            raise DomainError("box needs lower < upper in every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def _evaluate(self, pts):
        inside = np.all((pts >= np.asarray(self.lower)) & (pts <= np.asarray(self.upper)), axis=1)
        return inside.astype(float)

    def _quantile(self, pts):
        return np.where(self._evaluate(pts) > 0.5, np.inf, -np.inf)

    def trivial_value(self):
        if all(math.isinf(v) for v in self.lower + self.upper):
            return 1
        return None

    @property
    def concave_quantile(self):
        return True

    def to_dict(self):
        return {"type": "box_indicator", "lower": [_jsonable(v) for v in self.lower],
                "upper": [_jsonable(v) for v in self.upper]}


@dataclass(frozen=True)
class Constant(FunctionSpec):
    c: float
    dim: int = 1

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise DomainError(f"constant must lie in [0, 1], got {self.c}")
        object.__setattr__(self, "c", float(self.c))

    def _evaluate(self, pts):
        return np.full(pts.shape[0], self.c)

    def _quantile(self, pts):
        return np.full(pts.shape[0], float(ndtri(self.c)))

    def trivial_value(self):
        if self.c == 0.0:
            return 0
        if self.c == 1.0:
            return 1
        return None

    @property
    def concave_quantile(self):
        return True

    def to_dict(self):
        return {"type": "constant", "c": self.c, "dim": self.dim}


@dataclass(frozen=True, eq=False)
class GridSampled(FunctionSpec):
    """Samples on a uniform grid over a box, multilinearly interpolated.

    ``scale="probability"`` interpolates values in [0,1]; ``scale="quantile"``
    interpolates Phi^{-1} values (which may be -inf). Outside the box the
    function either extends as the nearest boundary sample (``"extend"``) or
    is 0 (``"neg_inf"``, i.e. Phi^{-1} = -inf).
    """

    lower: tuple
    upper: tuple
    data: np.ndarray
    scale: str = "probability"
    outside: str = "extend"

    def __post_init__(self):
        lo, hi = _vec(self.lower), _vec(self.upper)
        data = np.asarray(self.data, dtype=float)
        if data.ndim != len(lo) or any(s < 2 for s in data.shape):
            raise DomainError("grid data must have one axis per dimension and >= 2 samples per axis")
        if self.scale not in ("probability", "quantile"):
            raise DomainError(f"unknown grid scale {self.scale!r}")
        if self.outside not in ("extend", "neg_inf"):
            raise DomainError(f"unknown outside mode {self.outside!r}")
        if self.scale == "probability" and np.any((data < 0.0) | (data > 1.0)):
            raise DomainError("grid values must lie in [0, 1]")
        if self.scale == "quantile" and np.any(np.isnan(data) | (data == np.inf)):
            raise DomainError("quantile-scale grid data must be finite or -inf")
        data.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(l, h, s) for l, h, s in zip(self.lower, self.upper, self.data.shape)]

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / (np.asarray(self.data.shape) - 1)

    def _interp(self, pts: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lower)
        shape = np.asarray(self.data.shape)
        u = (np.clip(pts, lo, self.upper) - lo) / self.spacing
        idx = np.clip(np.floor(u).astype(int), 0, shape - 2)
        frac = u - idx
        out = np.zeros(pts.shape[0])
        neg = np.zeros(pts.shape[0], dtype=bool)
        for corner in itertools.product((0, 1), repeat=self.dim):
            c = np.asarray(corner)
            w = np.prod(np.where(c == 1, frac, 1.0 - frac), axis=1)
            vals = self.data[tuple((idx + c).T)]
            hit = w > 0.0
            neg |= hit & (vals == -np.inf)
            out += np.where(hit, w * np.where(np.isfinite(vals), vals, 0.0), 0.0)
        return np.where(neg, -np.inf, out)

    def _outside_mask(self, pts):
        return ~np.all((pts >= np.asarray(self.lower)) & (pts <= np.asarray(self.upper)), axis=1)

    def _evaluate(self, pts):
        vals = self._interp(pts)
        if self.scale == "quantile":
            vals = ndtr(vals)
        if self.outside == "neg_inf":
            vals = np.where(self._outside_mask(pts), 0.0, vals)
        return np.clip(vals, 0.0, 1.0)

    def _quantile(self, pts):
        if self.scale == "quantile":
            vals = self._interp(pts)
        else:
            vals = ndtri(np.clip(self._interp(pts), 0.0, 1.0))
        if self.outside == "neg_inf":
            vals = np.where(self._outside_mask(pts), -np.inf, vals)
        return vals

    def trivial_value(self):
        probs = ndtr(self.data) if self.scale == "quantile" else self.data
        if np.all(probs == 0.0):
            return 0
        if np.all(probs == 1.0) and self.outside == "extend":
            return 1
        return None

    def to_dict(self):
        return {"type": "grid_sampled", "lower": list(self.lower), "upper": list(self.upper),
                "data": [_jsonable(v) for v in self.data.ravel()], "shape": list(self.data.shape),
                "scale": self.scale, "outside": self.outside}


@dataclass(frozen=True)
class Complement(FunctionSpec):
    """x -> 1 - base(x)."""

    base: FunctionSpec

    @property
    def dim(self) -> int:
        return self.base.dim

    def _quantile(self, pts):
        return -self.base._quantile(pts)

    def _evaluate(self, pts):
        return 1.0 - self.base._evaluate(pts)

    def trivial_value(self):
        t = self.base.trivial_value()
        return None if t is None else 1 - t

    @property
    def concave_quantile(self):
        # -(concave) is concave only when affine
        return True if isinstance(self.base, (LinearGaussian, Constant, HalfspaceIndicator)) else None

    def to_dict(self):
        return {"type": "complement", "base": self.base.to_dict()}


@dataclass(frozen=True)
class Reflect(FunctionSpec):
    """x -> base(-x)."""

    base: FunctionSpec

    @property
    def dim(self) -> int:
        return self.base.dim

    def _quantile(self, pts):
        return self.base._quantile(-pts)

    def _evaluate(self, pts):
        return self.base._evaluate(-pts)

    def trivial_value(self):
        return self.base.trivial_value()

    @property
    def concave_quantile(self):
        return self.base.concave_quantile

    def to_dict(self):
        return {"type": "reflect", "base": self.base.to_dict()}


def evaluate(f: FunctionSpec, x) -> np.ndarray | float:
    out = f.evaluate(x)
    return float(out[0]) if np.ndim(x) <= 1 and out.shape[0] == 1 else out


def phi_inverse_of(f: FunctionSpec, x) -> np.ndarray | float:
    """Phi^{-1}(f(x)), symbolic where the representation allows (exact +-inf for indicators)."""
    out = f.quantile(x)
    return float(out[0]) if np.ndim(x) <= 1 and out.shape[0] == 1 else out


# --- hypothesis (B) ---------------------------------------------------------


@dataclass(frozen=True)
class HypothesisBReport:
    """Outcome of sampling the (B) gap at Gaussian-drawn tuples.

    A nonnegative ``max_violation`` is evidence only: an a.e. inequality
    cannot be certified by finitely many samples, only falsified.
    """

    max_violation: float
    witness: tuple
    samples: int
    n_violations: int
    certified: bool = field(default=False)


def hypothesis_b_check(
    h: FunctionSpec,
    fs: Sequence[FunctionSpec],
    lambdas: Sequence[float],
    samples: int = 2000,
    seed: int = 0,
    tol: float = 1e-10,
) -> HypothesisBReport:
    """Sample Phi^{-1}(h(sum l_i x_i)) - sum l_i Phi^{-1}(f_i(x_i)) and report the worst gap."""
    if len(fs) == 0:
        raise DomainError("hypothesis (B) needs at least one f_i")
    if len(fs) != len(lambdas):
        raise DomainError("one coefficient per function is required")
    if any(l <= 0 for l in lambdas):
        raise DomainError("coefficients must be positive")
    n = h.dim
    if any(f.dim != n for f in fs):
        raise DomainError("all functions must share a dimension")
    rng = np.random.Generator(np.random.Philox(key=seed))
    xs = rng.standard_normal((len(fs), samples, n))
    lam = np.asarray(lambdas, dtype=float)
    terms = np.stack([l * f.quantile(x) for l, f, x in zip(lam, fs, xs)])
    rhs = ext_sum_array(terms, axis=0)
    combo = np.tensordot(lam, xs, axes=1)
    lhs = h.quantile(combo)
    gap = np.asarray(ext_gap(lhs, rhs))
    k = int(np.argmin(gap))
    witness = tuple(tuple(float(v) for v in xs[i, k]) for i in range(len(fs)))
    return HypothesisBReport(
        max_violation=float(gap[k]),
        witness=witness,
        samples=samples,
        n_violations=int(np.sum(gap < -tol)),
    )


# --- Gaussian sets ----------------------------------------------------------


class GaussianSet:
    dim: int

    def contains(self, x) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Halfspace(GaussianSet):
    a: tuple
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _vec(self.a))
        object.__setattr__(self, "b", float(self.b))
        if _norm(self.a) == 0.0:
            raise DomainError("half-space normal must be nonzero")

    @property
    def dim(self):
        return len(self.a)

    def contains(self, x):
        return as_points(x, self.dim) @ np.asarray(self.a) + self.b >= 0.0

    def to_dict(self):
        return {"type": "halfspace", "a": list(self.a), "b": self.b}


@dataclass(frozen=True)
class IntervalUnion(GaussianSet):
    """Finite union of closed intervals; overlapping or touching pieces are merged."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        if any(not a < b for a, b in ivs):
            raise DomainError("intervals must have positive length")
        object.__setattr__(self, "intervals", _merge_intervals(ivs))

    dim = 1

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, x):
        pts = as_points(x, 1)[:, 0]
        out = np.zeros(pts.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (pts >= a) & (pts <= b)
        return out

    def to_dict(self):
        return {"type": "interval_union", "intervals": [[_jsonable(a), _jsonable(b)] for a, b in self.intervals]}


@dataclass(frozen=True)
class Box(GaussianSet):
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo, hi = _vec(self.lower), _vec(self.upper)
        if len(lo) != len(hi) or any(not l < h for l, h in zip(lo, hi)):
            raise DomainError("box needs lower < upper in every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return len(self.lower)

    def contains(self, x):
        pts = as_points(x, self.dim)
        return np.all((pts >= np.asarray(self.lower)) & (pts <= np.asarray(self.upper)), axis=1)

    def to_dict(self):
        return {"type": "box", "lower": [_jsonable(v) for v in self.lower],
                "upper": [_jsonable(v) for v in self.upper]}


def _scaled_sum(values, lambdas) -> float:
    # lambda > 0, so infinities keep their sign; mixed signs cannot occur for
    # endpoints of the same side
    return float(sum(l * v for l, v in zip(lambdas, values)))


def minkowski_combine(sets: Sequence[GaussianSet], lambdas: Sequence[float]) -> GaussianSet:
    """Exact scaled Minkowski sum sum_i lambda_i * A_i for intervals, boxes and parallel half-spaces."""
    if not sets or len(sets) != len(lambdas):
        raise DomainError("need one positive coefficient per set")
    if any(l <= 0 for l in lambdas):
        raise DomainError("coefficients must be positive")
    kind = type(sets[0])
    if any(type(s) is not kind for s in sets) or any(s.dim != sets[0].dim for s in sets):
        raise DomainError("all sets must share variant and dimension")
    if kind is IntervalUnion:
        if any(s.is_empty for s in sets):
            return IntervalUnion(())
        pieces = [
            (_scaled_sum([iv[0] for iv in combo], lambdas), _scaled_sum([iv[1] for iv in combo], lambdas))
            for combo in itertools.product(*(s.intervals for s in sets))
        ]
        return IntervalUnion(pieces)
    if kind is Box:
        lo = [_scaled_sum([s.lower[k] for s in sets], lambdas) for k in range(sets[0].dim)]
        hi = [_scaled_sum([s.upper[k] for s in sets], lambdas) for k in range(sets[0].dim)]
        return Box(lo, hi)
    if kind is Halfspace:
        units = [np.asarray(s.a) / _norm(s.a) for s in sets]
        for u in units[1:]:
            if not np.allclose(u, units[0], rtol=0.0, atol=1e-12):
                raise UnsupportedGeometryError("only half-spaces with a common outward normal can be combined")
        offset = sum(l * s.b / _norm(s.a) for l, s in zip(lambdas, sets))
        return Halfspace(tuple(units[0]), offset)
    raise UnsupportedGeometryError(f"Minkowski sums of {kind.__name__} are not supported")


def set_to_indicator(s: GaussianSet) -> FunctionSpec:
    if isinstance(s, Halfspace):
        return HalfspaceIndicator(s.a, s.b)
    if isinstance(s, IntervalUnion):
        if s.is_empty:
            return Constant(0.0, 1)
        return IntervalIndicator(s.intervals)
    if isinstance(s, Box):
        return BoxIndicator(s.lower, s.upper)
    raise UnsupportedGeometryError(f"no indicator for {type(s).__name__}")


# --- (de)serialisation ------------------------------------------------------


def _jsonable(v: float):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _num(value, path: str) -> float:
    if isinstance(value, bool):
        raise ConfigurationError(f"{path}: expected a number, got {value!r}")
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "-inf", "infinity", "-infinity"):
        return float(value)
    if not isinstance(value, (int, float)):
        raise ConfigurationError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _numlist(value, path: str) -> list[float]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    if not isinstance(value, (list, tuple)):
        raise ConfigurationError(f"{path}: expected a list of numbers")
    return [_num(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigurationError(f"{path}.{key}: missing required field")
    return d[key]


def spec_from_dict(d, path: str = "function") -> FunctionSpec:
    if not isinstance(d, dict):
        raise ConfigurationError(f"{path}: expected a mapping")
    kind = _require(d, "type", path)
    try:
        if kind == "linear_gaussian":
            return LinearGaussian(_numlist(_require(d, "a", path), f"{path}.a"), _num(_require(d, "b", path), f"{path}.b"))
        if kind == "halfspace_indicator":
            return HalfspaceIndicator(_numlist(_require(d, "a", path), f"{path}.a"), _num(_require(d, "b", path), f"{path}.b"))
        if kind == "concave_composite":
            v = _require(d, "V", path)
            if not isinstance(v, dict):
                raise ConfigurationError(f"{path}.V: expected a mapping")
            slopes = _require(v, "slopes", f"{path}.V")
            rows = [_numlist(r, f"{path}.V.slopes[{i}]") for i, r in enumerate(slopes)]
            offs = _numlist(_require(v, "offsets", f"{path}.V"), f"{path}.V.offsets")
            lo = _numlist(v["lower"], f"{path}.V.lower") if "lower" in v else None
            hi = _numlist(v["upper"], f"{path}.V.upper") if "upper" in v else None
            return ConcaveComposite(ConcavePWL(rows, offs, lo, hi))
        if kind == "interval_indicator":
            ivs = _require(d, "intervals", path)
            return IntervalIndicator([tuple(_numlist(iv, f"{path}.intervals[{i}]")) for i, iv in enumerate(ivs)])
        if kind == "box_indicator":
            return BoxIndicator(_numlist(_require(d, "lower", path), f"{path}.lower"),
                                _numlist(_require(d, "upper", path), f"{path}.upper"))
        if kind == "constant":
            return Constant(_num(_require(d, "c", path), f"{path}.c"), int(d.get("dim", 1)))
        if kind == "grid_sampled":
            shape = [int(s) for s in _require(d, "shape", path)]
            data = np.asarray(_numlist(_require(d, "data", path), f"{path}.data")).reshape(shape)
            return GridSampled(_numlist(_require(d, "lower", path), f"{path}.lower"),
                               _numlist(_require(d, "upper", path), f"{path}.upper"), data,
                               d.get("scale", "probability"), d.get("outside", "extend"))
        if kind == "complement":
            return Complement(spec_from_dict(_require(d, "base", path), f"{path}.base"))
        if kind == "reflect":
            return Reflect(spec_from_dict(_require(d, "base", path), f"{path}.base"))
        if kind == "set_indicator":
            return set_to_indicator(set_from_dict(_require(d, "set", path), f"{path}.set"))
    except (DomainError, UnsupportedGeometryError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    raise ConfigurationError(f"{path}.type: unknown function type {kind!r}")


def set_from_dict(d, path: str = "set") -> GaussianSet:
    if not isinstance(d, dict):
        raise ConfigurationError(f"{path}: expected a mapping")
    kind = _require(d, "type", path)
    try:
        if kind == "halfspace":
            return Halfspace(_numlist(_require(d, "a", path), f"{path}.a"), _num(_require(d, "b", path), f"{path}.b"))
        if kind == "interval_union":
            ivs = _require(d, "intervals", path)
            return IntervalUnion([tuple(_numlist(iv, f"{path}.intervals[{i}]")) for i, iv in enumerate(ivs)])
        if kind == "box":
            return Box(_numlist(_require(d, "lower", path), f"{path}.lower"),
                       _numlist(_require(d, "upper", path), f"{path}.upper"))
    except DomainError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    raise ConfigurationError(f"{path}.type: unknown set type {kind!r}")
