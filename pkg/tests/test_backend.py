import os
import subprocess
import sys

import numpy as np
import pytest

from borell_lab import BACKEND, ConcaveComposite, ConcavePWL, GridSampled, IntervalIndicator
from borell_lab._backend import backend_module
from borell_lab._kernels_py import CONCAVE, CONSTANT, HALFSPACE, INTERVALS, LINEAR
from borell_lab.heat import _kernel_params

try:
    NATIVE = backend_module("native")
except ImportError:
    NATIVE = None

PY = backend_module("python")
needs_native = pytest.mark.skipif(NATIVE is None, reason="compiled extension not built")


def _cases():
    rng = np.random.default_rng(5)
    yield LINEAR, np.array([1.3, -0.2])
    yield HALFSPACE, np.array([-0.7, 0.4])
    yield CONSTANT, np.array([0.3])
    yield INTERVALS, np.array([-2.0, -1.0, 0.5, 1.5])
    yield INTERVALS, np.array([-np.inf, 0.0, 1.0, np.inf])
    for _ in range(5):
        f = ConcaveComposite(ConcavePWL(rng.uniform(-2, 2, (3, 1)), rng.uniform(-1, 1, 3)))
        yield _kernel_params(f)
    f = ConcaveComposite(ConcavePWL([[1.0], [-1.0]], [0.0, 0.0], (-1.0,), (2.0,)))
    yield _kernel_params(f)
    xs = np.linspace(-2, 2, 9)
    g = GridSampled((-2.0,), (2.0,), np.minimum(xs, 0.5 - xs), scale="quantile")
    yield _kernel_params(g)


@needs_native
@pytest.mark.parametrize("case", list(_cases()), ids=lambda c: str(c[0]))
@pytest.mark.parametrize("t", [0.01, 0.5, 3.0])
@pytest.mark.parametrize("sx, su", [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0)])
def test_native_matches_python(case, t, sx, su):
    code, params = case
    x = np.linspace(-4, 4, 257)
    un, dn = NATIVE.smooth_u_1d(code, params, t, x, sx, su)
    up, dp = PY.smooth_u_1d(code, params, t, x, sx, su)
    ok = np.isfinite(up)
    assert np.array_equal(np.isfinite(un), ok)
    assert np.allclose(un[ok], up[ok], rtol=1e-13, atol=1e-13)
    assert np.allclose(dn[ok], dp[ok], rtol=1e-11, atol=1e-12)


def test_unknown_backend_name():
    with pytest.raises(ValueError):
        backend_module("fortran")


def test_active_backend_reported():
    assert BACKEND in ("native", "python")
    if NATIVE is not None and os.environ.get("BORELL_LAB_BACKEND", "") != "python":
        assert BACKEND == "native"


def _run(env_value):
    env = dict(os.environ)
    env["BORELL_LAB_BACKEND"] = env_value
    code = ("import borell_lab as b; from borell_lab import heat_apply, IntervalIndicator as I;"
            "print(b.BACKEND, repr(heat_apply(I([(-1.0, 0.5)]), 0.3, 0.2)))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, value = out.stdout.split()
    return name, float(value)


def test_environment_forces_python_fallback():
    name, value = _run("python")
    assert name == "python"
    name2, value2 = _run("")
    assert name2 == ("native" if NATIVE is not None else "python")
    assert value == pytest.approx(value2, rel=1e-14)


def test_heat_results_independent_of_backend(monkeypatch):
    from borell_lab import _backend, u_grad, u_value

    f = IntervalIndicator([(-1.0, 0.2), (0.7, 3.0)])
    x = np.linspace(-3, 3, 41)
    base = u_value(f, 0.4, x), u_grad(f, 0.4, x)
    monkeypatch.setattr(_backend, "_impl", PY)
    alt = u_value(f, 0.4, x), u_grad(f, 0.4, x)
    assert np.allclose(base[0], alt[0], rtol=1e-13, atol=1e-13)
    assert np.allclose(base[1], alt[1], rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("h, k", [(-1e-207, 1e-207), (1e-207, -1e-207), (-1e-207, -1e-207),
                                  (1e-207, 1e-207), (-1e-170, 3e-160), (0.0, -1e-300)])
def test_bvn_cdf_tiny_arguments(h, k):
    from scipy import stats

    from borell_lab._kernels_py import bvn_cdf

    r = 0.3
    ref = stats.multivariate_normal([0.0, 0.0], [[1.0, r], [r, 1.0]]).cdf([h, k])
    assert float(bvn_cdf(h, k, r)) == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("mod", [PY, NATIVE], ids=["python", "native"])
def test_kink_continuous_at_tiny_offsets(mod):
    if mod is None:
        pytest.skip("compiled extension not built")
    code, params = _kernel_params(ConcaveComposite(ConcavePWL([[1.0], [-1.0]], [0.0, 0.0])))
    x = np.array([0.0, 2.8e-207, -2.8e-207, 1e-300, 1e-20])
    u, _ = mod.smooth_u_1d(code, params, 1.0, x, 1.0, 1.0)
    assert np.allclose(u, u[0], atol=1e-12)
