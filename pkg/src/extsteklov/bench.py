"""Backend micro-benchmark: ``python -m extsteklov.bench``.

Times the hot kernels under every available backend (pure numpy, and
numba when importable) on representative workloads and prints a
comparison table.  Each measurement is the best of several repeats of a
timed loop, so JIT compilation cost is excluded.
"""

import argparse
import time

import numpy as np

from . import kernels


def _workloads(n_nodes=5000, lmax=12, n_cells=4000):
    rng = np.random.default_rng(12345)
    cos_theta = rng.uniform(-1.0, 1.0, n_nodes)
    phi = rng.uniform(-np.pi, np.pi, n_nodes)
    K = (lmax + 1) ** 2
    B = rng.standard_normal((n_nodes, K))
    w = rng.uniform(0.5, 1.5, n_nodes)
    u = rng.standard_normal(n_nodes)
    dl = rng.uniform(-1.0, 0.0, n_cells - 1)
    du = rng.uniform(-1.0, 0.0, n_cells - 1)
    d = 4.0 + rng.uniform(0.0, 1.0, n_cells)
    rhs = rng.standard_normal(n_cells)
    v = rng.standard_normal(n_cells)
    h = rng.uniform(0.01, 0.05, n_cells)
    cw = rng.uniform(0.1, 0.5, n_cells)
    return {
        "sph_table": (lambda: kernels.sph_table(cos_theta, phi, lmax), 5),
        "boundary_kernel": (lambda: kernels.boundary_kernel(u, 1.5), 200),
        "nonlinear_gradient": (
            lambda: kernels.nonlinear_gradient(B, w, u, 1.0, 1.0, 1.5, 3.0),
            50,
        ),
        "nonlinear_hessian": (
            lambda: kernels.nonlinear_hessian(B, w, u, 1.0, 1.0, 1.5, 3.0,
                                              1e-10),
            5,
        ),
        "tridiag_solve": (lambda: kernels.tridiag_solve(dl, d, du, rhs), 100),
        "pflow_psi_grad": (lambda: kernels.pflow_psi_grad(v, h, cw, 2.5), 100),
    }


def _best_of(fn, inner, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare kernel backends on representative workloads")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed repetitions per kernel (best is kept)")
    parser.add_argument("--nodes", type=int, default=5000,
                        help="quadrature nodes in the boundary workloads")
    parser.add_argument("--lmax", type=int, default=12,
                        help="harmonic degree of the trace-table workload")
    parser.add_argument("--cells", type=int, default=4000,
                        help="cells in the radial workloads")
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    if "numba" not in backends:
        print("numba is not importable; timing the numpy backend only")

    results = {}
    for backend in backends:
        kernels.use_backend(backend)
        kernels.warmup()
        loads = _workloads(args.nodes, args.lmax, args.cells)
        for name, (fn, inner) in loads.items():
            results.setdefault(name, {})[backend] = _best_of(
                fn, inner, args.repeats)

    width = max(len(n) for n in results) + 2
    header = f"{'kernel':<{width}}" + "".join(
        f"{b + ' (ms)':>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, times in results.items():
        row = f"{name:<{width}}"
        for b in backends:
            row += f"{times[b] * 1e3:>14.4f}"
        if len(backends) == 2:
            row += f"{times[backends[0]] / times[backends[1]]:>10.2f}"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
