"""Pure numpy/scipy implementations of the hot numeric kernels.

Functionally identical to the jitted twins in ``numba_impl``; used as the
fallback backend and as the reference in backend-parity tests.
"""

import numpy as np
from scipy.linalg import solve_banded

SQRT_INV_4PI = 0.28209479177387814347  # surface-normalized constant harmonic


def sph_table(cos_theta, phi, lmax):
    """Tabulate real orthonormal spherical harmonics at sphere points.

    Parameters
    ----------
    cos_theta, phi: (n,) arrays
        Polar cosine and azimuth of each point.
    lmax: int
        Highest degree to tabulate.

    Returns
    -------
    (n, (lmax+1)**2) array
        Column ``l*l + l + m`` holds Y_{l,m}; normalization is unit surface
        L2 norm on the sphere, no Condon-Shortley phase.
    """
    x = np.asarray(cos_theta, dtype=np.float64)
    ph = np.asarray(phi, dtype=np.float64)
    n = x.shape[0]
    out = np.empty((n, (lmax + 1) * (lmax + 1)), dtype=np.float64)
    sin_theta = np.sqrt(np.maximum(0.0, 1.0 - x * x))

    smm = np.full(n, SQRT_INV_4PI)
    for m in range(lmax + 1):
        if m > 0:
            smm = smm * sin_theta * np.sqrt((2.0 * m + 1.0) / (2.0 * m))
        if m == 0:
            cos_m = None
            sin_m = None
        else:
            cos_m = np.sqrt(2.0) * np.cos(m * ph)
            sin_m = np.sqrt(2.0) * np.sin(m * ph)

        p_prev = smm  # degree l = m
        p_prev2 = np.zeros(n)
        for l in range(m, lmax + 1):
            if l == m:
                p_cur = p_prev
            elif l == m + 1:
                p_cur = x * np.sqrt(2.0 * m + 3.0) * p_prev
            else:
                a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
                p_cur = a * (x * p_prev - b * p_prev2)
            if l > m:
                p_prev2 = p_prev
                p_prev = p_cur
            base = l * l + l
            if m == 0:
                out[:, base] = p_cur
            else:
                out[:, base + m] = p_cur * cos_m
                out[:, base - m] = p_cur * sin_m
    return out


def boundary_kernel(u, s):
    """Odd power kernel sign(u)|u|^(s-1), continuous at 0 for s > 1."""
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    nz = u != 0.0
    out[nz] = np.sign(u[nz]) * np.abs(u[nz]) ** (s - 1.0)
    return out


def mollified_power(u, s, eps):
    """(u^2 + eps^2)^((s-2)/2); caller guards the s < 2, eps = 0, u = 0 case."""
    u = np.asarray(u, dtype=np.float64)
    if eps == 0.0:
        out = np.zeros_like(u)
        nz = u != 0.0
        out[nz] = np.abs(u[nz]) ** (s - 2.0)
        return out
    return (u * u + eps * eps) ** ((s - 2.0) / 2.0)


def nonlinear_gradient(B, w, u, lam, mu, q, p):
    """Boundary-quadrature sums sum_i w_i (lam*k_q + mu*k_p)(u_i) B[i, :]."""
    kern = np.zeros_like(u)
    if lam != 0.0:
        kern = kern + lam * boundary_kernel(u, q)
    if mu != 0.0:
        kern = kern + mu * boundary_kernel(u, p)
    return B.T @ (w * kern)


def nonlinear_hessian(B, w, u, lam, mu, q, p, eps):
    """Quadrature matrix sum_i w_i d_i B_i B_i^T with the mollified weight

    d = lam*(q-1)*m_eps(u)^(q-2) + mu*(p-1)*m_eps(u)^(p-2).
    """
    d = np.zeros_like(u)
    if lam != 0.0:
        d = d + lam * (q - 1.0) * mollified_power(u, q, eps)
    if mu != 0.0:
        d = d + mu * (p - 1.0) * mollified_power(u, p, eps)
    return (B * (w * d)[:, None]).T @ B


def tridiag_solve(dl, d, du, b):
    """Solve a tridiagonal system (sub-, main-, super-diagonal form)."""
    n = d.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = du[: n - 1]
    ab[1, :] = d
    ab[2, : n - 1] = dl[: n - 1]
    return solve_banded((1, 1), ab, b)


def pflow_psi_grad(v, h, cellw, p):
    """Dirichlet-tail radial p-energy and its nodal gradient.

    ``v`` holds the n free nodal values; the value at the outer node is 0.
    Returns (psi, g) with psi = (1/p) sum |slope_i|^p cellw_i and
    g_j = d psi / d v_j.  The sphere-area factor is applied by the caller.
    """
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[0]
    vfull = np.empty(n + 1)
    vfull[:n] = v
    vfull[n] = 0.0
    slopes = (vfull[1:] - vfull[:-1]) / h
    apow = np.zeros_like(slopes)
    nz = slopes != 0.0
    apow[nz] = np.abs(slopes[nz]) ** (p - 2.0) * slopes[nz]
    psi = float(np.sum(np.abs(slopes) ** p * cellw)) / p
    flux = apow * cellw / h
    g = np.empty(n)
    g[0] = -flux[0]
    g[1:] = flux[:-1] - flux[1:]
    return psi, g
