import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from borell_lab import (
    BorellInstance,
    ConcaveComposite,
    ConcavePWL,
    ConfigurationError,
    Constant,
    DomainError,
    IntervalIndicator,
    LinearGaussian,
    SimConfig,
    TrivialFunctionError,
    UnsupportedGeometryError,
    correlated_noise,
    d1_d2_check,
    deficit,
    diagonal_sde_check,
    feynman_kac_estimate,
    lie_bracket_gap,
    make_equality_instance,
    minimizer_identities_check,
    simulate_paths,
    support_diagnostics,
    weak_order_study,
)
from borell_lab.diffusion import ensemble_summary
from borell_lab.equality import strict_fixtures

STRICT = dict(strict_fixtures())["interval_0.7"]
V = ConcavePWL([[1.0], [-0.7]], [0.2, 0.1])
CC = BorellInstance(0.4, 0.6, ConcaveComposite(V), ConcaveComposite(V), ConcaveComposite(V))
H1 = make_equality_instance("H1", {"lam": 0.5, "mu": 0.5, "a": [1.2], "bs": [0.3, -0.2]})
H2 = make_equality_instance("H2", {"lam": 0.4, "mu": 0.6, "a": [1.0], "bs": [0.3, -0.2]})
CONST = BorellInstance(0.7, 0.7, Constant(0.3), Constant(0.6), Constant(0.5))
# witness for a nonzero bracket: two different concave profiles
W1 = ConcaveComposite(ConcavePWL([[1.0], [-0.7]], [0.2, 0.1]))
W2 = ConcaveComposite(ConcavePWL([[0.5], [-1.5]], [0.0, 0.3]))
NONEQ = BorellInstance(0.5, 0.5, W1, W2, W1)
WITNESS = (0.5, 0.3, -0.2)


# --- configuration ---------------------------------------------------------------------


@pytest.mark.parametrize("kw", [
    {"dt": 0.0}, {"t_end": 1.0}, {"t_end": 0.0}, {"t_end": 0.95, "dt": 0.05}, {"n_paths": 0},
    {"seed": -1}, {"scheme": "milstein"}, {"kill_rule": "simpson"}, {"chunk_size": 0},
])
def test_simconfig_rejects(kw):
    with pytest.raises(ConfigurationError):
        SimConfig(**kw)


def test_time_grid_ends_at_t_end():
    g = SimConfig(dt=0.03, t_end=0.1).time_grid()
    assert g[0] == 0.0 and g[-1] == 0.1
    assert np.all(np.diff(g) > 0) and np.all(np.diff(g) <= 0.03 + 1e-15)


# --- correlated noise ----------------------------------------------------------------


def test_noise_rho_one_identical():
    z = correlated_noise(3, 1.0, 0.01, 1000, 5)
    assert np.array_equal(z[:, :3], z[:, 3:])


def test_noise_rho_minus_one_negated():
    z = correlated_noise(2, -1.0, 0.01, 1000, 5)
    assert np.array_equal(z[:, :2], -z[:, 2:])


@pytest.mark.parametrize("r", [-0.5, 0.0, 0.8])
def test_noise_empirical_correlation(r):
    count = 10 ** 6
    z = correlated_noise(1, r, 0.25, count, 11)
    assert np.corrcoef(z[:, 0], z[:, 1])[0, 1] == pytest.approx(r, abs=4 / math.sqrt(count))
    assert z[:, 0].var() == pytest.approx(0.25, rel=0.01)


def test_noise_rejects_bad_rho():
    with pytest.raises(DomainError):
        correlated_noise(1, 1.01, 0.1, 10, 0)


def test_noise_seeded():
    assert np.array_equal(correlated_noise(2, 0.3, 0.1, 50, 9), correlated_noise(2, 0.3, 0.1, 50, 9))
    assert not np.array_equal(correlated_noise(2, 0.3, 0.1, 50, 9), correlated_noise(2, 0.3, 0.1, 50, 10))


# --- simulation ----------------------------------------------------------------------


def test_paths_start_at_origin_and_shapes():
    cfg = SimConfig(dt=0.05, t_end=0.5, n_paths=7, seed=1)
    ens = simulate_paths(STRICT, cfg)
    assert ens.paths.shape == (7, 11, 2)
    assert ens.noise.shape == (7, 10, 2)
    assert np.all(ens.paths[:, 0] == 0.0)
    assert np.all(ens.accumulated_kill[:, 0] == 0.0)
    assert np.all(np.diff(ens.accumulated_kill, axis=1) >= 0.0)


def test_zero_drift_is_brownian():
    n = 4000
    t_end = 0.5
    ens = simulate_paths(CONST, SimConfig(dt=0.01, t_end=t_end, n_paths=n, seed=2))
    assert ens.X[:, -1, 0].var(ddof=1) == pytest.approx(t_end, abs=4 * math.sqrt(2 / n) * t_end)
    # no drift: the state is the sum of the increments
    assert np.allclose(ens.X[:, -1], ens.noise[:, :, :1].sum(axis=1), atol=1e-12)


def test_common_function_rho_one_collapses():
    ens = simulate_paths(CC, SimConfig(dt=0.01, t_end=0.9, n_paths=1000, seed=2))
    assert np.max(np.abs(ens.X - ens.Y)) <= 1e-9


def test_halfspace_difference_nonrandom():
    ens = simulate_paths(H2, SimConfig(dt=0.01, t_end=0.9, n_paths=1000, seed=2))
    assert np.max((ens.X - ens.Y)[:, :, 0].std(axis=0)) <= 1e-9


def test_simulation_rejects_trivial():
    inst = BorellInstance(0.5, 0.5, Constant(1.0), Constant(1.0), Constant(1.0), trivial_case=True)
    with pytest.raises(TrivialFunctionError):
        simulate_paths(inst, SimConfig(n_paths=2))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 64 - 1))
def test_degenerate_collapse_every_seed(seed):
    ens = simulate_paths(CC, SimConfig(dt=0.05, t_end=0.9, n_paths=20, seed=seed))
    assert support_diagnostics(ens).diag_spread <= 1e-9


def test_simulation_deterministic():
    cfg = SimConfig(dt=0.02, t_end=0.6, n_paths=50, seed=123)
    a, b = simulate_paths(STRICT, cfg), simulate_paths(STRICT, cfg)
    assert np.array_equal(a.paths, b.paths)
    assert np.array_equal(a.accumulated_kill, b.accumulated_kill)
    assert ensemble_summary(a) == ensemble_summary(b)


def test_paths_independent_of_chunking():
    base = SimConfig(dt=0.02, t_end=0.6, n_paths=37, seed=8)
    a = feynman_kac_estimate(STRICT, 0.6, base)
    b = feynman_kac_estimate(STRICT, 0.6, SimConfig(dt=0.02, t_end=0.6, n_paths=37, seed=8, chunk_size=5))
    assert a.mean == pytest.approx(b.mean, abs=1e-15)
    # each path's stream depends only on (seed, index): a prefix is reproduced
    big = simulate_paths(STRICT, base)
    small = simulate_paths(STRICT, SimConfig(dt=0.02, t_end=0.6, n_paths=10, seed=8))
    assert np.array_equal(big.paths[:10], small.paths)


def test_summary_rows():
    ens = simulate_paths(STRICT, SimConfig(dt=0.1, t_end=0.5, n_paths=5, seed=0))
    rows = ensemble_summary(ens)
    assert len(rows) == 6 and rows[0]["sd_x"] == 0.0
    assert set(rows[0]) == {"t", "mean_x", "sd_x", "mean_y", "sd_y", "sd_x_minus_y", "mean_kill"}


# --- Feynman-Kac -----------------------------------------------------------------------


def test_fk_constant_instance_exact():
    e = feynman_kac_estimate(CONST, 0.5, SimConfig(dt=0.01, t_end=0.5, n_paths=100, seed=2))
    assert e.mean == pytest.approx(float(deficit(CONST)), abs=1e-14)
    assert e.stderr == 0.0


def test_fk_h1_zero():
    e = feynman_kac_estimate(H1, 0.5, SimConfig(dt=0.01, t_end=0.5, n_paths=2000, seed=3))
    assert abs(e.mean) <= 3 * e.stderr + 1e-12


def test_fk_strict_interval():
    e = feynman_kac_estimate(STRICT, 0.5, SimConfig(dt=0.005, t_end=0.5, n_paths=20000, seed=9))
    assert abs(e.mean - float(deficit(STRICT))) <= 3 * e.stderr


def test_fk_t_consistency():
    cfg = SimConfig(dt=0.01, t_end=0.8, n_paths=20000, seed=9)
    est = [feynman_kac_estimate(STRICT, t, cfg) for t in (0.2, 0.5, 0.8)]
    for i in range(3):
        for j in range(i + 1, 3):
            a, b = est[i], est[j]
            assert abs(a.mean - b.mean) <= 3 * math.hypot(a.stderr, b.stderr)


def test_fk_time_window():
    cfg = SimConfig(dt=0.01, t_end=0.5, n_paths=10)
    for t in (0.0, 0.6):
        with pytest.raises(ConfigurationError):
            feynman_kac_estimate(STRICT, t, cfg)


def test_fk_single_path_stderr_infinite():
    e = feynman_kac_estimate(STRICT, 0.3, SimConfig(dt=0.05, t_end=0.5, n_paths=1, seed=0))
    assert math.isfinite(e.mean) and e.stderr == math.inf


def test_weak_order_one_explicit_euler():
    # explicit Euler freezes the kill integrand at the left endpoint too
    inst = dict(strict_fixtures())["h1_offset_perturbed"]
    d = float(deficit(inst))
    err = [abs(feynman_kac_estimate(inst, 0.8, SimConfig(dt=dt, t_end=0.8, n_paths=2000, seed=1,
                                                            kill_rule="left")).mean - d)
           for dt in (0.02, 0.01)]
    assert err[0] / err[1] == pytest.approx(2.0, abs=0.5)


def test_trapezoid_kill_second_order_on_ramps():
    # along Gaussian ramps with a common normal the integrand is nonrandom
    inst = dict(strict_fixtures())["h1_offset_perturbed"]
    d = float(deficit(inst))
    err = [abs(feynman_kac_estimate(inst, 0.8, SimConfig(dt=dt, t_end=0.8, n_paths=50, seed=1)).mean - d)
           for dt in (0.02, 0.01)]
    assert err[0] / err[1] == pytest.approx(4.0, abs=0.1)


def test_weak_order_study_coupled_levels():
    inst = dict(strict_fixtures())["h1_offset_perturbed"]
    w = weak_order_study(inst, 0.8, SimConfig(dt=0.02, t_end=0.8, n_paths=200, seed=1, kill_rule="left"))
    assert w.dts == pytest.approx((0.02, 0.01, 0.005))
    assert w.observed_ratios[0] == pytest.approx(2.0, abs=0.1)
    single = feynman_kac_estimate(inst, 0.8, SimConfig(dt=0.02, t_end=0.8, n_paths=200, seed=1, kill_rule="left"))
    assert w.means[0] == pytest.approx(single.mean, abs=1e-12)


@pytest.mark.parametrize("t, levels", [(0.81, 3), (0.8, 1)])
def test_weak_order_study_rejects(t, levels):
    with pytest.raises(ConfigurationError):
        weak_order_study(STRICT, t, SimConfig(dt=0.02, t_end=0.85, n_paths=2), levels=levels)


# --- support diagnostics ------------------------------------------------------------


def test_support_coverage_nondegenerate():
    s = 1.0 / math.sqrt(3.0)
    inst = BorellInstance(s, s, LinearGaussian([1.0], 0.2), LinearGaussian([-0.5], 0.1), LinearGaussian([0.7], 0.3))
    assert inst.rho == pytest.approx(0.5)
    d = support_diagnostics(simulate_paths(inst, SimConfig(dt=0.01, t_end=0.9, n_paths=2000, seed=5)))
    assert d.coverage > 0.5
    assert d.diag_spread > 0.1


def test_support_single_path_total():
    ens = simulate_paths(STRICT, SimConfig(dt=0.05, t_end=0.9, n_paths=1, seed=5))
    d = support_diagnostics(ens)
    assert d.diag_spread == 0.0 and 0.0 < d.coverage < 0.05


# --- bracket, minimizer and (D1)/(D2) --------------------------------------------------


@pytest.mark.parametrize("t", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("x", [-1.0, 0.0, 0.4, 1.3])
def test_gap_vanishes_on_common_diagonal(t, x):
    assert abs(lie_bracket_gap(CC, t, x, x)) <= 1e-5


@pytest.mark.parametrize("x, y", [(0.1, 0.2), (-1.0, 2.0), (0.7, -0.3)])
def test_gap_vanishes_for_ramps(x, y):
    assert abs(lie_bracket_gap(H1, 0.5, x, y)) <= 1e-6


def test_gap_witness_nonzero():
    assert abs(lie_bracket_gap(NONEQ, *WITNESS)) > 1e-3


def test_gap_rejects_higher_dimension():
    inst = dict(strict_fixtures())["box_2d"]
    with pytest.raises(UnsupportedGeometryError):
        lie_bracket_gap(inst, 0.5, 0.0, 0.0)
    with pytest.raises(DomainError):
        lie_bracket_gap(CC, 1.0, 0.0, 0.0)


def test_minimizer_residuals_h1():
    assert minimizer_identities_check(H1, 0.5, 0.3, -0.4).max_abs <= 1e-6


@pytest.mark.parametrize("t", [0.3, 0.7])
@pytest.mark.parametrize("x", [-0.5, 0.4])
def test_minimizer_residuals_common_diagonal(t, x):
    assert minimizer_identities_check(CC, t, x, x, dx=1e-3).max_abs <= 1e-5


def test_minimizer_residuals_strict_witness():
    r = minimizer_identities_check(STRICT, 0.5, 0.3, -0.4)
    assert r.max_abs > 1e-2
    assert len(r.as_tuple()) == 4


def test_d1_on_common_diagonal():
    v = d1_d2_check(CC, 0.5, 0.4, 0.4)
    assert v.verdict == "D1" and v.sum_one


@pytest.mark.parametrize("x, y", [(0.3, -1.0), (2.0, 1.5), (-0.2, -0.2)])
def test_d2_for_ramps(x, y):
    assert d1_d2_check(H1, 0.5, x, y).verdict in ("D2", "both")


def test_d2_strictly_off_diagonal_for_ramps():
    assert d1_d2_check(H1, 0.5, 0.3, -1.0).verdict == "D2"


def test_neither_for_strict():
    v = d1_d2_check(STRICT, 0.5, 0.3, -0.4)
    assert v.verdict == "neither" and not v.sum_one


# --- reduced diagonal SDE ------------------------------------------------------------


def test_diagonal_sde_matches():
    cfg = SimConfig(dt=0.01, t_end=0.9, n_paths=200, seed=4)
    assert diagonal_sde_check(CC, cfg) <= 1e-9


def test_diagonal_sde_constant_zero():
    k = BorellInstance(0.5, 0.5, Constant(0.3), Constant(0.3), Constant(0.3))
    assert diagonal_sde_check(k, SimConfig(dt=0.01, t_end=0.9, n_paths=50, seed=4)) == 0.0


def test_diagonal_sde_negative_control():
    cfg = SimConfig(dt=0.01, t_end=0.9, n_paths=200, seed=4)
    assert diagonal_sde_check(CC, cfg, reduced_seed=5) > 0.1


def test_diagonal_sde_preconditions():
    cfg = SimConfig(n_paths=2)
    I = IntervalIndicator([(-1.0, 1.0)])
    with pytest.raises(DomainError):
        diagonal_sde_check(BorellInstance(0.5, 0.5, I, IntervalIndicator([(-1.0, 2.0)]), I), cfg)
    with pytest.raises(DomainError):
        diagonal_sde_check(STRICT, cfg)
