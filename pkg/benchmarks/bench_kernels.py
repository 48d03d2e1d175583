"""Time the numba and numpy paths of every hot kernel on identical inputs.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run once per backend to warm up (numba compiles on first
call, cached on disk afterwards), then timed as the best of ``--repeat``
runs.  The last column is the largest relative difference between the two
backends' results.
"""

import argparse
import timeit

import numpy as np

from magicangles import _accel
from magicangles.lattice import OMEGA


def _cases():
    rng = np.random.default_rng(0)
    z = rng.uniform(-2, 2, 4000) + 1j * rng.uniform(-2, 2, 4000)
    coeffs = rng.standard_normal((33, 33)) + 1j * rng.standard_normal((33, 33))
    y1, y2 = rng.uniform(0, 2 * np.pi, (2, 2000))
    shifts = np.array([[-1, -1], [2, -1], [-1, 2]])
    weights = np.sqrt(3) * np.array([1, OMEGA, OMEGA**2])
    return {
        "theta_series (4000 pts, order 1)": lambda: _accel.theta_series(0.25, -0.5, z, OMEGA, 6, 1),
        "lattice_K (R=300)": lambda: _accel.lattice_K(2, 1, 300.0),
        "trace_mode_sum (R=400)": lambda: _accel.trace_mode_sum(400),
        "fourier_synthesis (N=16, 2000 pts)": lambda: _accel.fourier_synthesis(coeffs, y1, y2),
        "shift_coo (N=64)": lambda: _accel.shift_coo(64, shifts, weights)[2],
    }


def _reldiff(a, b):
    a = np.atleast_1d(np.asarray(a))
    b = np.atleast_1d(np.asarray(b))
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    previous = _accel.get_backend()
    print(f"{'kernel':40s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>9s} {'max rel diff':>13s}")
    try:
        for name, fn in _cases().items():
            times, results = {}, {}
            for backend in ("numba", "numpy"):
                _accel.set_backend(backend)
                results[backend] = fn()
                times[backend] = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
            print(f"{name:40s} {times['numba']:12.3f} {times['numpy']:12.3f} "
                  f"{times['numpy'] / times['numba']:9.1f} {_reldiff(results['numba'], results['numpy']):13.2e}")
    finally:
        _accel.set_backend(previous)


if __name__ == "__main__":
    main()
