import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ndtr

from borell_lab import (
    Box,
    BoxIndicator,
    Complement,
    ConcaveComposite,
    ConcavePWL,
    Constant,
    DomainError,
    GridSampled,
    Halfspace,
    HalfspaceIndicator,
    IntervalIndicator,
    IntervalUnion,
    LinearGaussian,
    Reflect,
    UnsupportedGeometryError,
    evaluate,
    hypothesis_b_check,
    minkowski_combine,
    phi_inverse_of,
    set_to_indicator,
)
from borell_lab.errors import ConfigurationError
from borell_lab.functions import set_from_dict, spec_from_dict


def tent():
    return ConcaveComposite(ConcavePWL([[1.0], [-1.0]], [1.0, 1.0]))


# --- evaluate ---------------------------------------------------------------


def test_evaluate_examples():
    assert evaluate(LinearGaussian((1.0,), 0.0), 0.0) == 0.5
    hs = HalfspaceIndicator((1.0,), -1.0)
    assert evaluate(hs, 2.0) == 1.0
    assert evaluate(hs, 0.0) == 0.0
    assert evaluate(tent(), 0.0) == pytest.approx(float(ndtr(1.0)), abs=1e-15)


def test_evaluate_dimension_mismatch():
    with pytest.raises(DomainError):
        evaluate(LinearGaussian((1.0, 2.0), 0.0), [1.0, 2.0, 3.0])


def _all_kinds():
    grid = GridSampled((-1.0, -1.0), (1.0, 1.0), np.linspace(0.1, 0.9, 12).reshape(3, 4))
    return [
        LinearGaussian((1.5, -0.5), 0.2),
        HalfspaceIndicator((0.3, 1.0), -0.1),
        ConcaveComposite(ConcavePWL([[1.0, 0.0], [0.0, -2.0]], [0.5, 0.1], (-2.0, -2.0), (2.0, 2.0))),
        BoxIndicator((-1.0, 0.0), (1.0, 2.0)),
        Constant(0.3, 2),
        grid,
        GridSampled((-1.0, -1.0), (1.0, 1.0), np.full((2, 2), -0.4), scale="quantile", outside="neg_inf"),
        Complement(LinearGaussian((1.0, 1.0), 0.0)),
        Reflect(grid),
    ]


@settings(max_examples=40)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=2))
def test_evaluate_lands_in_unit_interval(x):
    for f in _all_kinds():
        v = evaluate(f, x)
        assert 0.0 <= v <= 1.0


def test_evaluate_vectorised_matches_pointwise(rng):
    pts = rng.standard_normal((50, 2)) * 2
    for f in _all_kinds():
        batch = evaluate(f, pts)
        assert batch.shape == (50,)
        assert np.allclose(batch, [evaluate(f, p) for p in pts], rtol=0.0, atol=1e-14)


# --- phi_inverse_of -----------------------------------------------------------


def test_phi_inverse_indicator_is_exact_infinity():
    hs = HalfspaceIndicator((1.0,), -1.0)
    assert phi_inverse_of(hs, 5.0) == math.inf
    assert phi_inverse_of(hs, -5.0) == -math.inf
    assert phi_inverse_of(Constant(0.0), 3.0) == -math.inf
    assert phi_inverse_of(Constant(1.0), 3.0) == math.inf
    box = BoxIndicator((0.0,), (1.0,))
    assert phi_inverse_of(box, 0.5) == math.inf


@settings(max_examples=40)
@given(
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
    st.floats(-5, 5),
    st.lists(st.floats(-5, 5), min_size=3, max_size=3),
)
def test_phi_inverse_linear_is_affine(a, b, x):
    f = LinearGaussian(a, b)
    # symbolic path: no tail round trip even for large arguments
    assert phi_inverse_of(f, x) == pytest.approx(float(np.dot(a, x) + b), abs=1e-12)


def test_phi_inverse_far_tail_stays_symbolic():
    f = LinearGaussian((1.0,), 0.0)
    assert phi_inverse_of(f, 60.0) == 60.0
    assert phi_inverse_of(tent(), 80.0) == -79.0


def test_phi_inverse_matches_numeric_for_grid():
    g = GridSampled((0.0,), (1.0,), np.array([0.2, 0.7]))
    x = 0.25
    expected = 0.2 + 0.25 * 0.5
    from scipy.special import ndtri

    assert phi_inverse_of(g, x) == pytest.approx(float(ndtri(expected)), abs=1e-14)


def test_complement_and_reflect():
    f = LinearGaussian((2.0,), 0.3)
    assert evaluate(Complement(f), 0.4) == pytest.approx(1.0 - evaluate(f, 0.4), abs=1e-15)
    assert phi_inverse_of(Complement(f), 0.4) == pytest.approx(-(0.8 + 0.3), abs=1e-15)
    assert evaluate(Reflect(f), 0.4) == evaluate(f, -0.4)
    assert Complement(Constant(0.0)).trivial_value() == 1


# --- construction errors --------------------------------------------------------


@pytest.mark.parametrize(
    "build",
    [
        lambda: IntervalIndicator([(0.0, 1.0), (0.5, 2.0)]),
        lambda: IntervalIndicator([(1.0, 1.0)]),
        lambda: Constant(1.5),
        lambda: GridSampled((0.0,), (1.0,), np.array([0.1, 1.2])),
        lambda: GridSampled((0.0,), (1.0,), np.array([0.1])),
        lambda: ConcavePWL(np.zeros((0, 1)), []),
        lambda: BoxIndicator((0.0, 1.0), (1.0, 1.0)),
        lambda: Halfspace((0.0, 0.0), 1.0),
    ],
)
def test_invalid_construction(build):
    with pytest.raises(DomainError):
        build()


def test_interval_indicator_sorts_disjoint_pieces():
    f = IntervalIndicator([(2.0, 3.0), (-1.0, 0.0)])
    assert f.intervals == ((-1.0, 0.0), (2.0, 3.0))
    assert evaluate(f, [-0.5, 1.0, 2.5]).tolist() == [1.0, 0.0, 1.0]


def test_concave_pwl_domain_box():
    v = ConcavePWL([[1.0], [-1.0]], [0.0, 0.0], (-1.0,), (2.0,))
    out = v(np.array([[-2.0], [0.5], [3.0]]))
    assert out[0] == -np.inf and out[2] == -np.inf
    assert out[1] == -0.5


def test_concave_pwl_segments():
    v = ConcavePWL([[1.0], [-0.5], [0.0]], [0.5, 0.2, 10.0])
    segs = v.segments_1d()
    assert len(segs) == 2
    assert segs[0][0] == -math.inf and segs[-1][1] == math.inf
    assert segs[0][1] == pytest.approx(-0.2)


# --- hypothesis (B) ---------------------------------------------------------------


def test_hb_h1_family_zero_gap():
    a = (0.6, -0.8)
    lams = [0.7, 0.5]
    bs = [0.3, -1.1]
    fs = [LinearGaussian(a, b) for b in bs]
    h = LinearGaussian(a, sum(l * b for l, b in zip(lams, bs)))
    rep = hypothesis_b_check(h, fs, lams, samples=3000, seed=3)
    assert abs(rep.max_violation) <= 1e-10
    assert rep.samples == 3000
    assert rep.certified is False


def test_hb_trivial_violation():
    rep = hypothesis_b_check(Constant(0.0), [Constant(1.0)], [1.0], samples=10, seed=0)
    assert rep.max_violation == -math.inf
    assert rep.n_violations == 10
    assert len(rep.witness) == 1


@settings(max_examples=25)
@given(st.floats(0.05, 0.95), st.integers(0, 10_000))
def test_hb_common_concave_nonnegative(lam, seed):
    v = ConcavePWL([[1.0], [-0.7], [0.2]], [0.4, 0.1, 0.3])
    f = ConcaveComposite(v)
    rep = hypothesis_b_check(f, [f, f], [lam, 1.0 - lam], samples=500, seed=seed)
    assert rep.max_violation >= -1e-12


@settings(max_examples=25)
@given(
    st.floats(0.1, 3.0),
    st.floats(0.1, 3.0),
    st.floats(-2, 2),
    st.floats(-2, 2),
    st.floats(0, 2 * math.pi),
    st.integers(0, 10_000),
)
def test_hb_h2_family_no_violations(lam, mu, b, c, theta, seed):
    a = (math.cos(theta), math.sin(theta))
    f, g = HalfspaceIndicator(a, b), HalfspaceIndicator(a, c)
    hs = minkowski_combine([Halfspace(a, b), Halfspace(a, c)], [lam, mu])
    h = set_to_indicator(hs)
    rep = hypothesis_b_check(h, [f, g], [lam, mu], samples=400, seed=seed)
    assert rep.n_violations == 0


def test_hb_errors():
    f = LinearGaussian((1.0,), 0.0)
    with pytest.raises(DomainError):
        hypothesis_b_check(f, [], [])
    with pytest.raises(DomainError):
        hypothesis_b_check(f, [f], [0.0])
    with pytest.raises(DomainError):
        hypothesis_b_check(f, [LinearGaussian((1.0, 1.0), 0.0)], [1.0])


def test_hb_seeded_determinism():
    f = LinearGaussian((1.0,), 0.0)
    g = LinearGaussian((2.0,), 0.1)
    r1 = hypothesis_b_check(f, [f, g], [0.5, 0.5], samples=200, seed=9)
    r2 = hypothesis_b_check(f, [f, g], [0.5, 0.5], samples=200, seed=9)
    assert r1 == r2


# --- Minkowski sums ---------------------------------------------------------------


def test_minkowski_examples():
    iv = IntervalUnion([(-1.0, 1.0)])
    assert minkowski_combine([iv, iv], [0.5, 0.5]).intervals == ((-1.0, 1.0),)
    s = minkowski_combine([iv, iv], [0.7, 0.7])
    assert s.intervals[0] == pytest.approx((-1.4, 1.4), abs=1e-15)
    lam, mu, b, c = 0.4, 1.3, 0.7, -2.0
    hs = minkowski_combine([Halfspace((1.0,), b), Halfspace((1.0,), c)], [lam, mu])
    assert hs.a == (1.0,)
    assert hs.b == pytest.approx(lam * b + mu * c, abs=1e-15)


def test_minkowski_normalises_halfspace_normals():
    hs = minkowski_combine([Halfspace((2.0, 0.0), 1.0), Halfspace((0.5, 0.0), -1.0)], [1.0, 1.0])
    # {2x+1>=0} = {x>=-1/2}, {x/2-1>=0} = {x>=2}; sum is {x>=3/2}
    assert hs.a == (1.0, 0.0)
    assert hs.b == pytest.approx(-1.5, abs=1e-15)


def test_minkowski_box_and_merging():
    b = minkowski_combine([Box((0.0, -1.0), (1.0, 1.0)), Box((2.0, 0.0), (3.0, 4.0))], [1.0, 0.5])
    assert b.lower == (1.0, -1.0) and b.upper == (2.5, 3.0)
    u = IntervalUnion([(-2.0, -1.0), (1.0, 2.0)])
    s = minkowski_combine([u, u], [0.5, 0.5])
    assert s.intervals == ((-2.0, -1.0), (-0.5, 0.5), (1.0, 2.0))
    assert minkowski_combine([u, IntervalUnion(())], [1.0, 1.0]).is_empty


def test_minkowski_errors():
    with pytest.raises(UnsupportedGeometryError):
        minkowski_combine([Halfspace((1.0, 0.0), 0.0), Halfspace((0.0, 1.0), 0.0)], [1.0, 1.0])
    with pytest.raises(DomainError):
        minkowski_combine([Box((0.0,), (1.0,)), IntervalUnion([(0.0, 1.0)])], [1.0, 1.0])
    with pytest.raises(DomainError):
        minkowski_combine([Box((0.0,), (1.0,))], [-1.0])


def _subintervals(draw_pairs):
    return [(min(a, b), min(a, b) + abs(a - b) + 0.01) for a, b in draw_pairs]


pairs = st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=3)


@settings(max_examples=100)
@given(pairs, pairs, st.floats(0.05, 3), st.floats(0.05, 3), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_minkowski_interval_monotone(p1, p2, lam, mu, grow_l, grow_r):
    a = IntervalUnion(_subintervals(p1))
    b = IntervalUnion(_subintervals(p2))
    a_big = IntervalUnion([(lo - grow_l, hi + grow_r) for lo, hi in a.intervals])
    small = minkowski_combine([a, b], [lam, mu])
    big = minkowski_combine([a_big, b], [lam, mu])
    for lo, hi in small.intervals:
        pts = np.linspace(lo, hi, 7)
        assert np.all(big.contains(pts))


@settings(max_examples=60)
@given(st.floats(-10, 10), st.floats(0.01, 10), st.floats(0.01, 0.99))
def test_convex_interval_is_fixed(lo, width, lam):
    a = IntervalUnion([(lo, lo + width)])
    s = minkowski_combine([a, a], [lam, 1.0 - lam])
    assert len(s.intervals) == 1
    assert s.intervals[0][0] == pytest.approx(lo, abs=1e-12)
    assert s.intervals[0][1] == pytest.approx(lo + width, abs=1e-12)


# --- set_to_indicator --------------------------------------------------------------


def test_set_to_indicator_examples():
    assert set_to_indicator(Halfspace((1.0, 2.0), 0.5)) == HalfspaceIndicator((1.0, 2.0), 0.5)
    assert set_to_indicator(IntervalUnion(())) == Constant(0.0, 1)
    f = set_to_indicator(IntervalUnion([(0.0, math.inf)]))
    assert evaluate(f, 3.0) == 1.0
    assert evaluate(f, -3.0) == 0.0


@pytest.mark.parametrize(
    "s",
    [
        Halfspace((0.3, -1.2, 0.5), 0.2),
        IntervalUnion([(-1.0, 0.2), (0.9, 1.7)]),
        Box((-1.0, 0.0, -0.5), (0.5, 2.0, 1.5)),
    ],
)
def test_indicator_agrees_with_membership(s, rng):
    pts = rng.standard_normal((1000, s.dim)) * 1.5
    assert np.array_equal(evaluate(set_to_indicator(s), pts) == 1.0, s.contains(pts))


# --- serialisation -----------------------------------------------------------------


@pytest.mark.parametrize("f", _all_kinds() + [IntervalIndicator([(-math.inf, 0.0), (1.0, 2.0)]), tent()])
def test_spec_round_trip(f, rng):
    g = spec_from_dict(f.to_dict())
    pts = rng.standard_normal((40, f.dim)) * 2
    assert np.array_equal(evaluate(f, pts), evaluate(g, pts))


@pytest.mark.parametrize("s", [Halfspace((1.0, 0.0), 0.5), IntervalUnion([(0.0, 1.0)]), Box((0.0,), (1.0,))])
def test_set_round_trip(s):
    assert set_from_dict(s.to_dict()) == s


@pytest.mark.parametrize(
    "d, fragment",
    [
        ({"type": "nope"}, "function.type"),
        ({"type": "linear_gaussian", "a": [1.0]}, "function.b"),
        ({"type": "linear_gaussian", "a": ["x"], "b": 0}, "function.a[0]"),
        ({"type": "constant", "c": 2.0}, "function"),
        ({"type": "set_indicator", "set": {"type": "box", "lower": [1], "upper": [0]}}, "function.set"),
    ],
)
def test_spec_config_errors(d, fragment):
    with pytest.raises(ConfigurationError, match=fragment.replace("[", r"\[").replace("]", r"\]")):
        spec_from_dict(d)


def test_string_infinities_accepted():
    f = spec_from_dict({"type": "interval_indicator", "intervals": [["-inf", 0.0]]})
    assert f.intervals == ((-math.inf, 0.0),)
