"""Diffusions driven by the Borell drift, Feynman-Kac estimation and the degeneracy diagnostics.

The pair (X, Y) solves ``d[X; Y] = b(1 - s, X, Y) ds + d[W; B]`` with
``<W^i, B^j>_s = delta_ij rho s`` and starts at the origin. Along it

    C(1, 0, 0) = E[ C(1 - t, X_t, Y_t) exp(-1/2 int_0^t |grad u_h(1 - s, lam X_s + mu Y_s)|^2 ds) ].

Every path owns a counter-based Philox stream keyed by ``(seed, path index)``,
so results do not depend on how paths are batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .borell import BorellInstance, fields
from .errors import ConfigurationError, DomainError, TrivialFunctionError, UnsupportedGeometryError
from .heat import u_and_grad, u_second

__all__ = [
    "SimConfig",
    "PathEnsemble",
    "FKEstimate",
    "SupportDiagnostics",
    "MinimizerResiduals",
    "D1D2Verdict",
    "correlated_noise",
    "simulate_paths",
    "feynman_kac_estimate",
    "WeakOrderStudy",
    "weak_order_study",
    "support_diagnostics",
    "lie_bracket_gap",
    "minimizer_identities_check",
    "d1_d2_check",
    "diagonal_sde_check",
    "ensemble_summary",
]

_U64 = 1 << 64


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_end: float = 0.9
    n_paths: int = 1000
    seed: int = 0
    scheme: str = "euler_maruyama"
    chunk_size: int = 8192
    kill_rule: str = "trapezoid"

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not 0.0 < self.t_end < 1.0:
            raise ConfigurationError(f"t_end must lie in (0, 1), got {self.t_end}")
        if not self.t_end + self.dt < 1.0:
            raise ConfigurationError("t_end + dt must stay below 1 (the drift is singular at heat time 0)")
        if int(self.n_paths) < 1:
            raise ConfigurationError("n_paths must be at least 1")
        if not 0 <= int(self.seed) < _U64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.scheme != "euler_maruyama":
            raise ConfigurationError(f"unsupported scheme {self.scheme!r}")
        if self.kill_rule not in ("trapezoid", "left"):
            raise ConfigurationError(f"kill_rule must be 'trapezoid' or 'left', got {self.kill_rule!r}")
        if int(self.chunk_size) < 1:
            raise ConfigurationError("chunk_size must be positive")

    def time_grid(self, t_end: float | None = None) -> np.ndarray:
        end = self.t_end if t_end is None else float(t_end)
        k = max(1, math.ceil(end / self.dt - 1e-9))
        return np.minimum(np.arange(k + 1) * self.dt, end)


@dataclass(frozen=True)
class PathEnsemble:
    """Simulated paths.

    ``paths`` has shape (n_paths, K + 1, 2n) holding (X, Y); ``noise`` the
    (K, 2n) increments of (W, B) for each path; ``accumulated_kill`` the
    running trapezoid integral of ``|grad u_h|^2`` at every grid time.
    """

    times: np.ndarray
    paths: np.ndarray
    noise: np.ndarray
    accumulated_kill: np.ndarray
    rho: float
    seed: int

    @property
    def dim(self) -> int:
        return self.paths.shape[2] // 2

    @property
    def X(self) -> np.ndarray:
        return self.paths[:, :, : self.dim]

    @property
    def Y(self) -> np.ndarray:
        return self.paths[:, :, self.dim:]


def _mix(z1: np.ndarray, z2: np.ndarray, rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Turn independent standard normals into a pair with correlation rho."""
    if rho == 1.0:
        return z1, z1.copy()
    if rho == -1.0:
        return z1, -z1
    sp, sm = math.sqrt(1.0 + rho), math.sqrt(1.0 - rho)
    a, b = 0.5 * (sp + sm), 0.5 * (sp - sm)
    return a * z1 + b * z2, b * z1 + a * z2


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not -1.0 <= rho <= 1.0:
        raise DomainError(f"correlation must lie in [-1, 1], got {rho}")
    return rho


def correlated_noise(n: int, rho: float, dt: float, count: int, seed: int) -> np.ndarray:
    """``count`` increments of (W, B) over a step ``dt``, shape (count, 2n).

    Per-coordinate covariance is ``dt * [[1, rho], [rho, 1]]``; rho = +-1
    copies or negates the W block exactly.
    """
    rho = _check_rho(rho)
    if n < 1 or count < 0 or not dt > 0.0:
        raise DomainError("need n >= 1, count >= 0 and dt > 0")
    rng = np.random.Generator(np.random.Philox(key=int(seed) % _U64))
    z = rng.standard_normal((count, 2, n))
    w, b = _mix(z[:, 0], z[:, 1], rho)
    return math.sqrt(dt) * np.concatenate([w, b], axis=1)


def _path_increments(seed: int, first: int, count: int, steps: np.ndarray, n: int, rho: float) -> np.ndarray:
    """Increments of shape (count, K, 2n) for paths first .. first + count - 1."""
    k = steps.shape[0]
    z = np.empty((count, k, 2, n))
    for j in range(count):
        rng = np.random.Generator(np.random.Philox(key=((first + j) << 64) | seed))
        z[j] = rng.standard_normal((k, 2, n))
    w, b = _mix(z[:, :, 0], z[:, :, 1], rho)
    scale = np.sqrt(steps)[None, :, None]
    return np.concatenate([w * scale, b * scale], axis=2)


def _require_simulable(inst: BorellInstance) -> float:
    if any(f.trivial_value() is not None for f in (inst.f, inst.g, inst.h)):
        raise TrivialFunctionError("the drift needs nontrivial f, g and h")
    return _check_rho(inst.rho)


def _run(inst: BorellInstance, times: np.ndarray, incr: np.ndarray, record: bool, left: bool = False):
    """Euler-Maruyama over one batch. Returns final fields, kill integral and optional records.

    ``left`` freezes the kill integrand at the left endpoint like the drift.
    """
    m, k, two_n = incr.shape
    n = two_n // 2
    X = np.zeros((m, n))
    Y = np.zeros((m, n))
    F = fields(inst, 1.0, X, Y)
    kill = np.zeros(m)
    g_prev = np.sum(F.duh ** 2, axis=1)
    paths = kills = None
    if record:
        paths = np.zeros((m, k + 1, two_n))
        kills = np.zeros((m, k + 1))
    for i in range(k):
        ds = times[i + 1] - times[i]
        b1, b2 = F.drift()
        X = X + b1 * ds + incr[:, i, :n]
        Y = Y + b2 * ds + incr[:, i, n:]
        F = fields(inst, 1.0 - times[i + 1], X, Y)
        g_next = np.sum(F.duh ** 2, axis=1)
        kill = kill + (ds * g_prev if left else 0.5 * ds * (g_prev + g_next))
        g_prev = g_next
        if record:
            paths[:, i + 1, :n] = X
            paths[:, i + 1, n:] = Y
            kills[:, i + 1] = kill
    return F, kill, paths, kills


def simulate_paths(inst: BorellInstance, cfg: SimConfig) -> PathEnsemble:
    """Simulate and retain every path, its noise and its kill integral."""
    r = _require_simulable(inst)
    times = cfg.time_grid()
    steps = np.diff(times)
    n = inst.dim
    incr = _path_increments(int(cfg.seed), 0, int(cfg.n_paths), steps, n, r)
    _, _, paths, kills = _run(inst, times, incr, record=True, left=cfg.kill_rule == "left")
    return PathEnsemble(times, paths, incr, kills, r, int(cfg.seed))


@dataclass(frozen=True)
class FKEstimate:
    mean: float
    stderr: float
    n_paths: int
    t: float


def feynman_kac_estimate(inst: BorellInstance, t: float, cfg: SimConfig) -> FKEstimate:
    """Monte Carlo estimate of C(1, 0, 0) from the diffusion stopped at time t.

    Paths are streamed in chunks of ``cfg.chunk_size`` and not retained.
    """
    t = float(t)
    if not 0.0 < t <= cfg.t_end + 1e-12:
        raise ConfigurationError(f"t = {t} must lie in (0, t_end = {cfg.t_end}]")
    r = _require_simulable(inst)
    times = cfg.time_grid(t)
    steps = np.diff(times)
    total = int(cfg.n_paths)
    values = np.empty(total)
    for first in range(0, total, int(cfg.chunk_size)):
        count = min(int(cfg.chunk_size), total - first)
        incr = _path_increments(int(cfg.seed), first, count, steps, inst.dim, r)
        F, kill, _, _ = _run(inst, times, incr, record=False, left=cfg.kill_rule == "left")
        values[first:first + count] = F.c(inst.lam, inst.mu) * np.exp(-0.5 * kill)
    stderr = float(values.std(ddof=1) / math.sqrt(total)) if total > 1 else math.inf
    return FKEstimate(float(values.mean()), stderr, total, t)


@dataclass(frozen=True)
class WeakOrderStudy:
    """Estimates at step sizes dt, dt/2, ... driven by one shared set of fine increments.

    ``diffs[j]`` is the mean of the per-path difference between levels j and
    j + 1 and ``diff_stderr[j]`` its standard error. Coupling the levels
    removes most of the Monte Carlo noise from these differences.
    """

    dts: tuple
    means: tuple
    stderrs: tuple
    diffs: tuple
    diff_stderr: tuple

    @property
    def observed_ratios(self) -> tuple:
        return tuple(a / b for a, b in zip(self.diffs, self.diffs[1:]))


def weak_order_study(inst: BorellInstance, t: float, cfg: SimConfig, levels: int = 3) -> WeakOrderStudy:
    """Feynman-Kac estimates on a ladder of halved step sizes with coupled noise.

    ``t`` must be a whole number of coarse steps ``cfg.dt``. A weak order one
    scheme shows ratios of consecutive differences near 2.
    """
    t = float(t)
    if levels < 2:
        raise ConfigurationError("a weak-order study needs at least two levels")
    if not 0.0 < t <= cfg.t_end + 1e-12:
        raise ConfigurationError(f"t = {t} must lie in (0, t_end = {cfg.t_end}]")
    k0 = round(t / cfg.dt)
    if k0 < 1 or abs(k0 * cfg.dt - t) > 1e-9:
        raise ConfigurationError("t must be a whole number of steps dt")
    r = _require_simulable(inst)
    fine = 1 << (levels - 1)
    k = k0 * fine
    steps = np.full(k, t / k)
    total = int(cfg.n_paths)
    values = np.empty((levels, total))
    for first in range(0, total, int(cfg.chunk_size)):
        count = min(int(cfg.chunk_size), total - first)
        incr = _path_increments(int(cfg.seed), first, count, steps, inst.dim, r)
        for j in range(levels):
            block = 1 << (levels - 1 - j)
            coarse = incr.reshape(count, k // block, block, -1).sum(axis=2)
            times = np.linspace(0.0, t, k // block + 1)
            F, kill, _, _ = _run(inst, times, coarse, record=False, left=cfg.kill_rule == "left")
            values[j, first:first + count] = F.c(inst.lam, inst.mu) * np.exp(-0.5 * kill)
    root = math.sqrt(total)
    ddof = 1 if total > 1 else 0
    d = values[:-1] - values[1:]
    return WeakOrderStudy(
        dts=tuple(t / (k0 << j) for j in range(levels)),
        means=tuple(float(v) for v in values.mean(axis=1)),
        stderrs=tuple(float(v) for v in values.std(axis=1, ddof=ddof) / root),
        diffs=tuple(float(v) for v in d.mean(axis=1)),
        diff_stderr=tuple(float(v) for v in d.std(axis=1, ddof=ddof) / root),
    )


@dataclass(frozen=True)
class SupportDiagnostics:
    diag_spread: float
    coverage: float


def support_diagnostics(ens: PathEnsemble, bins: int = 30, half_width: float = 3.0) -> SupportDiagnostics:
    """Spread of X - Y at the final time and Gaussian-mass-weighted histogram coverage.

    Coverage counts the (X, Y) cells of a ``bins x bins`` grid on
    ``[-half_width, half_width]^2`` hit by at least one path, weighting each
    cell by its standard Gaussian mass. Only the first coordinate is used.
    """
    xf = ens.X[:, -1, :]
    yf = ens.Y[:, -1, :]
    diff = xf - yf
    spread = float(np.max(diff.std(axis=0))) if diff.shape[0] > 1 else 0.0
    edges = np.linspace(-half_width, half_width, bins + 1)
    hist, _, _ = np.histogram2d(xf[:, 0], yf[:, 0], bins=[edges, edges])
    cell = np.diff(ndtr(edges))
    mass = np.outer(cell, cell)
    coverage = float(mass[hist > 0].sum() / mass.sum())
    return SupportDiagnostics(spread, coverage)


def ensemble_summary(ens: PathEnsemble) -> list[dict]:
    """Per-time summary rows (first coordinate), the CSV export of an ensemble."""
    rows = []
    x = ens.X[:, :, 0]
    y = ens.Y[:, :, 0]
    for i, t in enumerate(ens.times):
        rows.append({
            "t": float(t),
            "mean_x": float(x[:, i].mean()),
            "sd_x": float(x[:, i].std()),
            "mean_y": float(y[:, i].mean()),
            "sd_y": float(y[:, i].std()),
            "sd_x_minus_y": float((x[:, i] - y[:, i]).std()),
            "mean_kill": float(ens.accumulated_kill[:, i].mean()),
        })
    return rows


def _one_dim(inst: BorellInstance) -> None:
    if inst.dim != 1:
        raise UnsupportedGeometryError("the degeneracy diagnostics are one-dimensional")


def _diag_time(t: float) -> float:
    t = float(t)
    if not 0.0 < t < 1.0:
        raise DomainError(f"t must lie in (0, 1), got {t}")
    return 1.0 - t


def lie_bracket_gap(inst: BorellInstance, t: float, x: float, y: float, h: float = 1e-4) -> float:
    """(d/dx + d/dy)(b1 - b2) with b evaluated at heat time 1 - t.

    A nonzero value is the first-bracket condition for locally
    nondegenerate support; identically zero values point to the degenerate
    alternative. Central differences along the diagonal direction.
    """
    _one_dim(inst)
    s = _diag_time(t)
    pts = np.array([[x + h], [x - h]])
    qts = np.array([[y + h], [y - h]])
    b1, b2 = fields(inst, s, pts, qts).drift()
    d = (b1[0, 0] - b2[0, 0]) - (b1[1, 0] - b2[1, 0])
    return float(d / (2.0 * h))


@dataclass(frozen=True)
class MinimizerResiduals:
    c_x: float
    c_y: float
    c_xx_minus_c_yy: float
    c_xx_plus_c_xy: float

    @property
    def max_abs(self) -> float:
        return max(abs(self.c_x), abs(self.c_y), abs(self.c_xx_minus_c_yy), abs(self.c_xx_plus_c_xy))

    def as_tuple(self) -> tuple:
        return (self.c_x, self.c_y, self.c_xx_minus_c_yy, self.c_xx_plus_c_xy)


def minimizer_identities_check(inst: BorellInstance, t: float, x: float, y: float,
                               dx: float = 1e-3) -> MinimizerResiduals:
    """Finite-difference residuals of C_x = C_y = 0 and C_xx = C_yy = -C_xy at heat time 1 - t."""
    _one_dim(inst)
    s = _diag_time(t)
    offs = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
    X = np.array([[x + i * dx] for i, _ in offs])
    Y = np.array([[y + j * dx] for _, j in offs])
    c = fields(inst, s, X, Y).c(inst.lam, inst.mu)
    c0, cxp, cxm, cyp, cym, cpp, cpm, cmp_, cmm = c
    c_x = (cxp - cxm) / (2 * dx)
    c_y = (cyp - cym) / (2 * dx)
    c_xx = (cxp - 2 * c0 + cxm) / dx ** 2
    c_yy = (cyp - 2 * c0 + cym) / dx ** 2
    c_xy = (cpp - cpm - cmp_ + cmm) / (4 * dx ** 2)
    return MinimizerResiduals(float(c_x), float(c_y), float(c_xx - c_yy), float(c_xx + c_xy))


@dataclass(frozen=True)
class D1D2Verdict:
    verdict: str
    d1_residual: float
    d2_residual: float
    sum_one: bool


def d1_d2_check(inst: BorellInstance, t: float, x: float, y: float, tol: float = 1e-6) -> D1D2Verdict:
    """Test (D1) u_f = u_g and (D2) vanishing second derivatives, at heat time 1 - t."""
    _one_dim(inst)
    s = _diag_time(t)
    uf = u_and_grad(inst.f, s, [[x]])[0][0]
    ug = u_and_grad(inst.g, s, [[y]])[0][0]
    d1 = abs(float(uf - ug))
    z = inst.lam * x + inst.mu * y
    d2 = max(abs(u_second(inst.h, s, z)), abs(u_second(inst.f, s, x)), abs(u_second(inst.g, s, y)))
    is1, is2 = d1 <= tol, d2 <= tol
    verdict = "both" if is1 and is2 else "D1" if is1 else "D2" if is2 else "neither"
    return D1D2Verdict(verdict, d1, float(d2), inst.rho == 1.0)


def diagonal_sde_check(inst: BorellInstance, cfg: SimConfig, reduced_seed: int | None = None) -> float:
    """Max |X_full - X_reduced| where the reduced SDE is dX = -u_f grad u_f dt + dW.

    Requires f = g = h and lambda + mu = 1. ``reduced_seed`` drives the
    reduced equation with different noise (a negative control).
    """
    if not (inst.f == inst.g == inst.h):
        raise DomainError("the diagonal reduction needs f = g = h")
    if inst.rho != 1.0:
        raise DomainError("the diagonal reduction needs lambda + mu = 1")
    ens = simulate_paths(inst, cfg)
    n = inst.dim
    if reduced_seed is None:
        dw = ens.noise[:, :, :n]
    else:
        dw = _path_increments(int(reduced_seed), 0, ens.paths.shape[0], np.diff(ens.times), n, 1.0)[:, :, :n]
    X = np.zeros((ens.paths.shape[0], n))
    worst = 0.0
    for i in range(len(ens.times) - 1):
        u, du = u_and_grad(inst.f, 1.0 - ens.times[i], X)
        X = X - u[:, None] * du * (ens.times[i + 1] - ens.times[i]) + dw[:, i]
        worst = max(worst, float(np.max(np.abs(ens.X[:, i + 1] - X))))
    return worst

