"""Backend parity: the numba kernels must match the numpy reference."""

import os
import subprocess
import sys

import numpy as np
import pytest

from extsteklov import kernels

HAVE_NUMBA = "numba" in kernels.available_backends()

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not importable")


@pytest.fixture
def both_backends():
    """Run the wrapped call under each backend and return the outputs."""
    previous = kernels.active_backend()

    def run(fn):
        outs = []
        for name in kernels.available_backends():
            kernels.use_backend(name)
            outs.append(fn())
        return outs

    yield run
    kernels.use_backend(previous)


def _assert_matching(outs):
    ref = outs[0]
    for other in outs[1:]:
        if isinstance(ref, tuple):
            for a, b in zip(ref, other):
                np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)
        else:
            np.testing.assert_allclose(ref, other, rtol=1e-13, atol=1e-13)


def test_available_and_active():
    names = kernels.available_backends()
    assert names[0] == "numpy"
    assert kernels.active_backend() in names


def test_use_backend_rejects_unknown():
    with pytest.raises(ValueError, match="unknown kernel backend"):
        kernels.use_backend("fortran")


def test_env_var_selects_backend():
    env = dict(os.environ, EXTSTEKLOV_BACKEND="numpy")
    out = subprocess.run(
        [sys.executable, "-c",
         "from extsteklov import kernels; print(kernels.active_backend())"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


@needs_numba
def test_sph_table_parity(both_backends, rng):
    ct = rng.uniform(-1.0, 1.0, 60)
    ph = rng.uniform(-np.pi, np.pi, 60)
    _assert_matching(both_backends(lambda: kernels.sph_table(ct, ph, 8)))


@needs_numba
@pytest.mark.parametrize("s", [1.5, 2.0, 3.0])
def test_boundary_kernel_parity(both_backends, rng, s):
    u = rng.standard_normal(200)
    _assert_matching(both_backends(lambda: kernels.boundary_kernel(u, s)))


@needs_numba
@pytest.mark.parametrize("eps", [0.0, 1e-10, 1e-3])
def test_mollified_power_parity(both_backends, rng, eps):
    u = rng.standard_normal(200)
    u[0] = 0.0
    _assert_matching(
        both_backends(lambda: kernels.mollified_power(u, 1.5, eps)))


@needs_numba
def test_nonlinear_gradient_parity(both_backends, rng):
    B = rng.standard_normal((150, 9))
    w = rng.uniform(0.1, 1.0, 150)
    u = B @ rng.standard_normal(9)
    _assert_matching(both_backends(
        lambda: kernels.nonlinear_gradient(B, w, u, 1.0, 0.5, 1.5, 3.0)))


@needs_numba
def test_nonlinear_hessian_parity(both_backends, rng):
    B = rng.standard_normal((150, 9))
    w = rng.uniform(0.1, 1.0, 150)
    u = B @ rng.standard_normal(9)
    _assert_matching(both_backends(
        lambda: kernels.nonlinear_hessian(B, w, u, 1.0, 0.5, 1.5, 3.0, 1e-10)))


@needs_numba
def test_tridiag_solve_parity(both_backends, rng):
    n = 400
    d = rng.uniform(2.0, 3.0, n)
    dl = rng.uniform(-1.0, -0.5, n - 1)
    du = rng.uniform(-1.0, -0.5, n - 1)
    b = rng.standard_normal(n)
    _assert_matching(both_backends(lambda: kernels.tridiag_solve(dl, d, du, b)))


@needs_numba
@pytest.mark.parametrize("p", [1.5, 2.0, 2.5])
def test_pflow_psi_grad_parity(both_backends, rng, p):
    n = 300
    v = rng.standard_normal(n)
    h = rng.uniform(0.01, 0.1, n)
    cellw = rng.uniform(0.5, 2.0, n)
    _assert_matching(
        both_backends(lambda: kernels.pflow_psi_grad(v, h, cellw, p)))


def test_tridiag_solve_against_dense(rng):
    n = 50
    d = rng.uniform(2.0, 3.0, n)
    dl = rng.uniform(-1.0, -0.5, n - 1)
    du = rng.uniform(-1.0, -0.5, n - 1)
    b = rng.standard_normal(n)
    A = np.diag(d) + np.diag(dl, -1) + np.diag(du, 1)
    x = kernels.tridiag_solve(dl, d, du, b)
    np.testing.assert_allclose(A @ x, b, rtol=0, atol=1e-11)
