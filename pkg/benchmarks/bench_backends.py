"""Compare the compiled kernel with the pure-NumPy fallback on the 1-D smoothing families.

    python3 benchmarks/bench_backends.py [--points 20000] [--repeat 5]

Prints the best-of-``repeat`` wall time per family and backend, the speedup,
and the largest disagreement between the two backends.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from borell_lab import ConcaveComposite, ConcavePWL, GridSampled
from borell_lab._backend import backend_module
from borell_lab._kernels_py import HALFSPACE, INTERVALS, LINEAR
from borell_lab.heat import _kernel_params


def cases():
    xs = np.linspace(-3, 3, 61)
    return {
        "linear": (LINEAR, np.array([1.3, -0.2])),
        "halfspace": (HALFSPACE, np.array([-0.7, 0.4])),
        "intervals(3)": (INTERVALS, np.array([-2.0, -1.0, 0.0, 0.5, 1.0, 2.5])),
        "concave(4 pieces)": _kernel_params(ConcaveComposite(
            ConcavePWL([[1.5], [0.4], [-0.3], [-1.2]], [0.3, 0.1, 0.2, 0.6]))),
        "grid(61 nodes)": _kernel_params(GridSampled((-3.0,), (3.0,), np.minimum(xs, 0.5 - xs),
                                                     scale="quantile")),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--t", type=float, default=0.5)
    args = ap.parse_args(argv)

    py = backend_module("python")
    try:
        native = backend_module("native")
    except ImportError:
        native = None
        print("compiled extension not available; timing the Python fallback only")
    x = np.linspace(-4, 4, args.points)

    print(f"{'family':<20}{'python ms':>12}{'native ms':>12}{'speedup':>10}{'max u diff':>12}")
    for name, (code, params) in cases().items():
        def run(mod):
            return mod.smooth_u_1d(code, params, args.t, x, 1.0, 1.0)

        t_py = min(timeit.repeat(lambda: run(py), number=1, repeat=args.repeat))
        if native is None:
            print(f"{name:<20}{1e3 * t_py:>12.2f}{'-':>12}{'-':>10}{'-':>12}")
            continue
        t_nat = min(timeit.repeat(lambda: run(native), number=1, repeat=args.repeat))
        up, _ = run(py)
        un, _ = run(native)
        ok = np.isfinite(up)
        diff = float(np.max(np.abs(up[ok] - un[ok]))) if ok.any() else 0.0
        print(f"{name:<20}{1e3 * t_py:>12.2f}{1e3 * t_nat:>12.2f}{t_py / t_nat:>10.1f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
