"""Benchmark the numba-jitted hot kernels against the pure-numpy fallback.

Run directly:

    python benchmarks/bench_backends.py [n]

Times the Riesz kernel assembly (the O(n^2) product-integration matrix),
the Morawetz pair-kernel assembly, and a convolution-heavy evolution loop
under both backends.  The backend actually selected by HARTREE_LAB_NUMBA
is marked with an asterisk.
"""

import sys
import time

import numpy as np

from hartree_lab import accel
from hartree_lab.grid import RadialGrid
from hartree_lab.morawetz import _pair_matrix_numba, _pair_matrix_numpy, build_weight
from hartree_lab.riesz import (_GL_X, _GL_W, NEAR_BAND, _assemble_numba,
                               _assemble_numpy, build_kernel)


def timeit(fn, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 1023
    grid = RadialGrid(40.0, n)
    gamma = 1.5
    weight = build_weight(12.0, grid)
    rows = []

    if accel.using_numba():
        # warm the JIT before timing
        _assemble_numba(gamma, grid.nodes[:64], grid.dr, _GL_X, _GL_W, NEAR_BAND)
        _pair_matrix_numba(gamma, grid.nodes[:64], grid.dr,
                           weight.phi[:64], weight.phip[:64])
        t = timeit(lambda: _assemble_numba(gamma, grid.nodes, grid.dr,
                                           _GL_X, _GL_W, NEAR_BAND))
        rows.append(("riesz kernel assembly", "numba", t))
        t = timeit(lambda: _pair_matrix_numba(gamma, grid.nodes, grid.dr,
                                              weight.phi, weight.phip))
        rows.append(("morawetz pair assembly", "numba", t))
    t = timeit(lambda: _assemble_numpy(gamma, grid.nodes, grid.dr))
    rows.append(("riesz kernel assembly", "numpy", t))
    t = timeit(lambda: _pair_matrix_numpy(gamma, grid.nodes, grid.dr,
                                          weight.phi, weight.phip))
    rows.append(("morawetz pair assembly", "numpy", t))

    # application cost: gamma=2 O(n) fast path vs dense matvec
    kf = build_kernel(2.0, grid)
    kd = build_kernel(2.0, grid, force_dense=True)
    g = np.exp(-((grid.nodes - 2.0) / 1.5) ** 2)
    t = timeit(lambda: [kf.apply(g) for _ in range(200)])
    rows.append(("convolve x200 (gamma=2 fast)", "-", t))
    t = timeit(lambda: [kd.apply(g) for _ in range(200)])
    rows.append(("convolve x200 (dense matvec)", "-", t))

    active = accel.backend()
    print(f"n = {n}, active backend = {active}")
    print(f"{'task':32s} {'backend':8s} {'seconds':>10s}")
    for task, backend, secs in rows:
        mark = "*" if backend == active else " "
        print(f"{task:32s} {backend:7s}{mark} {secs:10.4f}")


if __name__ == "__main__":
    main()
