"""Jitted twins of the kernels in ``numpy_impl``.

Import fails cleanly when numba is unavailable; the package falls back to
the numpy backend in that case.
"""

import numpy as np
from numba import njit

SQRT_INV_4PI = 0.28209479177387814347


@njit(cache=True)
def sph_table(cos_theta, phi, lmax):
    n = cos_theta.shape[0]
    ncols = (lmax + 1) * (lmax + 1)
    out = np.empty((n, ncols))
    sqrt2 = np.sqrt(2.0)
    for i in range(n):
        x = cos_theta[i]
        st2 = 1.0 - x * x
        st = np.sqrt(st2) if st2 > 0.0 else 0.0
        smm = SQRT_INV_4PI
        for m in range(lmax + 1):
            if m > 0:
                smm = smm * st * np.sqrt((2.0 * m + 1.0) / (2.0 * m))
            if m == 0:
                cm = 0.0
                sm = 0.0
            else:
                cm = sqrt2 * np.cos(m * phi[i])
                sm = sqrt2 * np.sin(m * phi[i])
            p_prev = smm
            p_prev2 = 0.0
            for l in range(m, lmax + 1):
                if l == m:
                    p_cur = p_prev
                elif l == m + 1:
                    p_cur = x * np.sqrt(2.0 * m + 3.0) * p_prev
                    p_prev2 = p_prev
                    p_prev = p_cur
                else:
                    a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                    b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
                    p_cur = a * (x * p_prev - b * p_prev2)
                    p_prev2 = p_prev
                    p_prev = p_cur
                base = l * l + l
                if m == 0:
                    out[i, base] = p_cur
                else:
                    out[i, base + m] = p_cur * cm
                    out[i, base - m] = p_cur * sm
    return out


@njit(cache=True)
def boundary_kernel(u, s):
    n = u.shape[0]
    out = np.zeros(n)
    for i in range(n):
        ui = u[i]
        if ui > 0.0:
            out[i] = ui ** (s - 1.0)
        elif ui < 0.0:
            out[i] = -((-ui) ** (s - 1.0))
    return out


@njit(cache=True)
def mollified_power(u, s, eps):
    n = u.shape[0]
    out = np.zeros(n)
    if eps == 0.0:
        for i in range(n):
            ui = abs(u[i])
            if ui != 0.0:
                out[i] = ui ** (s - 2.0)
    else:
        e2 = eps * eps
        for i in range(n):
            out[i] = (u[i] * u[i] + e2) ** ((s - 2.0) / 2.0)
    return out


@njit(cache=True)
def nonlinear_gradient(B, w, u, lam, mu, q, p):
    n, k = B.shape
    out = np.zeros(k)
    for i in range(n):
        ui = u[i]
        kern = 0.0
        if lam != 0.0 and ui != 0.0:
            if ui > 0.0:
                kern += lam * ui ** (q - 1.0)
            else:
                kern -= lam * (-ui) ** (q - 1.0)
        if mu != 0.0 and ui != 0.0:
            if ui > 0.0:
                kern += mu * ui ** (p - 1.0)
            else:
                kern -= mu * (-ui) ** (p - 1.0)
        if kern != 0.0:
            wk = w[i] * kern
            for j in range(k):
                out[j] += wk * B[i, j]
    return out


@njit(cache=True)
def nonlinear_hessian(B, w, u, lam, mu, q, p, eps):
    n, k = B.shape
    out = np.zeros((k, k))
    e2 = eps * eps
    for i in range(n):
        ui = u[i]
        d = 0.0
        if lam != 0.0:
            if eps == 0.0:
                if ui != 0.0:
                    d += lam * (q - 1.0) * abs(ui) ** (q - 2.0)
            else:
                d += lam * (q - 1.0) * (ui * ui + e2) ** ((q - 2.0) / 2.0)
        if mu != 0.0:
            if eps == 0.0:
                if ui != 0.0:
                    d += mu * (p - 1.0) * abs(ui) ** (p - 2.0)
            else:
                d += mu * (p - 1.0) * (ui * ui + e2) ** ((p - 2.0) / 2.0)
        if d != 0.0:
            wd = w[i] * d
            for a in range(k):
                ba = wd * B[i, a]
                for b in range(a, k):
                    out[a, b] += ba * B[i, b]
    for a in range(k):
        for b in range(a):
            out[a, b] = out[b, a]
    return out


@njit(cache=True)
def tridiag_solve(dl, d, du, b):
    n = d.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    cp[0] = du[0] / d[0]
    dp[0] = b[0] / d[0]
    for i in range(1, n):
        denom = d[i] - dl[i - 1] * cp[i - 1]
        cp[i] = du[i] / denom if i < n - 1 else 0.0
        dp[i] = (b[i] - dl[i - 1] * dp[i - 1]) / denom
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


@njit(cache=True)
def pflow_psi_grad(v, h, cellw, p):
    n = v.shape[0]
    psi = 0.0
    flux = np.empty(n)
    for i in range(n):
        vnext = v[i + 1] if i + 1 < n else 0.0
        s = (vnext - v[i]) / h[i]
        a = abs(s)
        psi += a ** p * cellw[i]
        if s > 0.0:
            flux[i] = a ** (p - 1.0) * cellw[i] / h[i]
        elif s < 0.0:
            flux[i] = -(a ** (p - 1.0)) * cellw[i] / h[i]
        else:
            flux[i] = 0.0
    psi /= p
    g = np.empty(n)
    g[0] = -flux[0]
    for j in range(1, n):
        g[j] = flux[j - 1] - flux[j]
    return psi, g
