"""Backend dispatch for the numeric hot kernels.

Two interchangeable implementations exist: a pure numpy/scipy one and a
numba-jitted one.  The active backend is chosen at import time from the
``EXTSTEKLOV_BACKEND`` environment variable (``numba`` or ``numpy``); the
default is numba when it imports, numpy otherwise.  Tests and benchmarks
switch at runtime through :func:`use_backend`.
"""

import os

import numpy as np

from . import numpy_impl

try:
    from . import numba_impl

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    numba_impl = None
    _HAVE_NUMBA = False

_KERNELS = (
    "sph_table",
    "boundary_kernel",
    "mollified_power",
    "nonlinear_gradient",
    "nonlinear_hessian",
    "tridiag_solve",
    "pflow_psi_grad",
)

_active = None
_active_name = ""


def available_backends():
    """Names of the importable backends, reference implementation first."""
    names = ["numpy"]
    if _HAVE_NUMBA:
        names.append("numba")
    return names


def use_backend(name):
    """Select the kernel backend by name ('numpy' or 'numba')."""
    global _active, _active_name
    if name == "numpy":
        _active = numpy_impl
    elif name == "numba":
        if not _HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
        _active = numba_impl
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    _active_name = name
    return name


def active_backend():
    """Name of the backend currently in use."""
    return _active_name


def _default_backend():
    env = os.environ.get("EXTSTEKLOV_BACKEND", "").strip().lower()
    if env:
        return env
    return "numba" if _HAVE_NUMBA else "numpy"


use_backend(_default_backend())


def _as_f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def sph_table(cos_theta, phi, lmax):
    return _active.sph_table(_as_f64(cos_theta), _as_f64(phi), int(lmax))


def boundary_kernel(u, s):
    return _active.boundary_kernel(_as_f64(u), float(s))


def mollified_power(u, s, eps):
    return _active.mollified_power(_as_f64(u), float(s), float(eps))


def nonlinear_gradient(B, w, u, lam, mu, q, p):
    return _active.nonlinear_gradient(
        _as_f64(B), _as_f64(w), _as_f64(u), float(lam), float(mu), float(q), float(p)
    )


def nonlinear_hessian(B, w, u, lam, mu, q, p, eps):
    return _active.nonlinear_hessian(
        _as_f64(B), _as_f64(w), _as_f64(u),
        float(lam), float(mu), float(q), float(p), float(eps),
    )


def tridiag_solve(dl, d, du, b):
    return _active.tridiag_solve(_as_f64(dl), _as_f64(d), _as_f64(du), _as_f64(b))


def pflow_psi_grad(v, h, cellw, p):
    return _active.pflow_psi_grad(_as_f64(v), _as_f64(h), _as_f64(cellw), float(p))


def warmup():
    """Compile the jitted kernels on tiny inputs (no-op on the numpy path)."""
    ct = np.array([0.3, -0.2])
    ph = np.array([0.1, 1.2])
    sph_table(ct, ph, 2)
    u = np.array([0.5, -0.25])
    w = np.array([1.0, 2.0])
    B = np.array([[1.0, 0.5], [0.25, -1.0]])
    boundary_kernel(u, 1.5)
    mollified_power(u, 1.5, 1e-10)
    nonlinear_gradient(B, w, u, 1.0, 1.0, 1.5, 3.0)
    nonlinear_hessian(B, w, u, 1.0, 1.0, 1.5, 3.0, 1e-10)
    tridiag_solve(np.array([1.0]), np.array([2.0, 2.0]), np.array([1.0]), w)
    pflow_psi_grad(u, w, w, 2.5)
