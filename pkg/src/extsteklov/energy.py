"""Concave-convex boundary energy in Steklov coefficient space.

For a truncated expansion ``u = sum_j c_j s_j`` in the orthonormal Steklov
trace basis the exterior gradient inner product diagonalizes,
``<s_i, s_j> = delta_j kron_ij``, so the functional

    phi(u) = 1/2 ||u||^2 - lam/q int |u|^q dsigma - mu/p int |u|^p dsigma

and its first two derivatives reduce to boundary-quadrature sums over the
trace matrix.  The module also provides the discrete tail embedding
constants (sup of a boundary L^s norm over the gradient norm on spans of
trailing modes), the fountain radii built from them, and the algebraic
identities used to classify critical points by energy sign.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels


class AscentStallError(RuntimeError):
    """Raised when no multistart of the embedding ascent reaches tolerance."""


def trace_critical_exponent(dim):
    """Critical boundary-trace exponent 2 (N-1) / (N-2)."""
    return 2.0 * (dim - 1.0) / (dim - 2.0)


@dataclass(frozen=True)
class EnergyParams:
    """Multipliers and exponents of the boundary energy.

    Exponents must satisfy ``1 < q < 2 < p``; the multipliers may take any
    sign (nonpositive values disable the corresponding existence branch but
    the functional itself stays well defined).  ``p`` at or above the
    critical trace exponent ``2 (N-1) / (N-2)`` is rejected unless
    ``allow_supercritical`` is set, in which case a warning records that
    the discrete quantities stay finite while the compact-embedding
    rationale is lost.
    """

    lam: float
    mu: float
    q: float
    p: float
    dim: int = 3
    allow_supercritical: bool = False

    def __post_init__(self):
        if not (1.0 < self.q < 2.0):
            raise ValueError(f"q must lie in (1, 2), got {self.q}")
        if not self.p > 2.0:
            raise ValueError(f"p must exceed 2, got {self.p}")
        if int(self.dim) != self.dim or self.dim < 3:
            raise ValueError(f"dimension must be an integer >= 3, got {self.dim!r}")
        crit = trace_critical_exponent(self.dim)
        if self.p >= crit:
            if not self.allow_supercritical:
                raise ValueError(
                    f"p = {self.p} is at or above the critical trace exponent "
                    f"{crit} for N = {self.dim}; set allow_supercritical to "
                    "proceed anyway"
                )
            warnings.warn(
                f"p = {self.p} is at or above the critical trace exponent "
                f"{crit}; discrete results stay finite but lose their "
                "compact-embedding backing",
                stacklevel=2,
            )


@dataclass(frozen=True, eq=False)
class HarmonicElement:
    """Truncated expansion u = sum_j c_j s_j with cached gradient norm."""

    basis: object
    coeffs: np.ndarray
    grad_norm: float = 0.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=np.float64))
        if c.ndim != 1 or not 1 <= c.shape[0] <= self.basis.size:
            raise ValueError(
                f"coefficient vector must have length 1..{self.basis.size}, "
                f"got shape {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)
        nrm = float(np.sqrt(np.dot(self.basis.eigenvalues[: c.shape[0]], c * c)))
        object.__setattr__(self, "grad_norm", nrm)

    @property
    def K(self):
        return self.coeffs.shape[0]

    def boundary_values(self, rule):
        """Nodal boundary values at the rule's quadrature nodes."""
        B = self.basis.trace_matrix(rule)
        return B[:, : self.K] @ self.coeffs

    def padded(self, K):
        """Same element viewed in the span of the first ``K >= self.K`` modes."""
        if K < self.K:
            raise ValueError(f"cannot pad from K={self.K} down to {K}")
        c = np.zeros(K)
        c[: self.K] = self.coeffs
        return HarmonicElement(self.basis, c)

    def scaled(self, t):
        return HarmonicElement(self.basis, t * self.coeffs)

    def __neg__(self):
        return self.scaled(-1.0)


def _parts(u, rule):
    B = u.basis.trace_matrix(rule)[:, : u.K]
    return u.coeffs, B, u.basis.eigenvalues[: u.K], B @ u.coeffs


def boundary_power(u, rule, s):
    """Boundary integral int |u|^s dsigma under the rule."""
    vals = u.boundary_values(rule)
    return float(np.dot(rule.weights, np.abs(vals) ** s))


def energy_value(u, params, rule):
    """Value of the boundary energy at the element."""
    c, _, delta, vals = _parts(u, rule)
    w = rule.weights
    out = 0.5 * float(np.dot(delta, c * c))
    if params.lam != 0.0:
        out -= params.lam / params.q * float(np.dot(w, np.abs(vals) ** params.q))
    if params.mu != 0.0:
        out -= params.mu / params.p * float(np.dot(w, np.abs(vals) ** params.p))
    if not np.isfinite(out):
        raise FloatingPointError("non-finite energy value")
    return out


def energy_gradient(u, params, rule):
    """Coefficient-space gradient of the energy.

    Component j is ``delta_j c_j - int (lam |u|^(q-2) u + mu |u|^(p-2) u)
    s_j dsigma``.
    """
    c, B, delta, vals = _parts(u, rule)
    g = delta * c
    if params.lam != 0.0 or params.mu != 0.0:
        g = g - kernels.nonlinear_gradient(
            B, rule.weights, vals, params.lam, params.mu, params.q, params.p
        )
    return g


def energy_hessian(u, params, rule, eps=1e-10):
    """Coefficient-space Hessian with mollified second-derivative weight.

    The exact weight ``|u|^(s-2)`` is replaced by ``m_eps(u)^(s-2)`` with
    ``m_eps(u) = (u^2 + eps^2)^(1/2)``.  ``eps = 0`` requests the exact
    weight and is rejected when the concave term is active and the trace
    vanishes at a quadrature node, where ``|u|^(q-2)`` blows up.
    """
    if eps < 0.0:
        raise ValueError(f"regularization eps must be >= 0, got {eps}")
    c, B, delta, vals = _parts(u, rule)
    if eps == 0.0 and params.lam != 0.0 and np.any(vals == 0.0):
        i = int(np.argmax(vals == 0.0))
        raise FloatingPointError(
            f"exact Hessian weight |u|^(q-2) is singular: the trace vanishes "
            f"at quadrature node {i}; pass eps > 0"
        )
    H = np.diag(delta)
    if params.lam != 0.0 or params.mu != 0.0:
        H = H - kernels.nonlinear_hessian(
            B, rule.weights, vals, params.lam, params.mu, params.q, params.p, eps
        )
    return H


def ps_identity(u, params, rule, r):
    """Both sides of the exact truncation identity with test exponent ``r``.

    For ``r`` equal to the convex exponent p:

        phi - (1/p) phi'(u) u = (1/2 - 1/p) ||u||^2 - lam (1/q - 1/p) |u|_q^q

    and for ``r`` equal to the concave exponent q:

        phi - (1/q) phi'(u) u = (1/2 - 1/q) ||u||^2 - mu (1/p - 1/q) |u|_p^p.

    The left side is assembled from :func:`energy_value` and
    :func:`energy_gradient`, the right side from norms alone; the identity
    is exact for the discrete functional, so the two agree to rounding.
    Returns ``(lhs, rhs)``.
    """
    q, p = params.q, params.p
    if r == p:
        other, mult = q, params.lam
    elif r == q:
        other, mult = p, params.mu
    else:
        raise ValueError(f"test exponent must be q={q} or p={p}, got {r}")
    phi = energy_value(u, params, rule)
    gdotc = float(np.dot(energy_gradient(u, params, rule), u.coeffs))
    lhs = phi - gdotc / r
    rhs = (0.5 - 1.0 / r) * u.grad_norm**2 - mult * (
        1.0 / other - 1.0 / r
    ) * boundary_power(u, rule, other)
    return lhs, rhs


def _ascent_objective(B, w, inv_sqrt_delta, s, y):
    u = B @ (inv_sqrt_delta * y)
    au = np.abs(u)
    val = float(np.dot(w, au**s))
    kern = np.zeros_like(u)
    nz = u != 0.0
    kern[nz] = np.sign(u[nz]) * au[nz] ** (s - 1.0)
    f = val ** (1.0 / s)
    gf = (f / val) * (inv_sqrt_delta * (B.T @ (w * kern)))
    return f, gf


def _ascent_hessian(B, w, inv_sqrt_delta, s, y):
    """Hessian of f(y) = (int |u|^s)^(1/s), u = B diag(isd) y.

    The second power-kernel is mollified near the nodal set when s < 2;
    the Hessian only preconditions the polish step, so the mollification
    does not bias the stationary point.
    """
    u = B @ (inv_sqrt_delta * y)
    au = np.abs(u)
    val = float(np.dot(w, au**s))
    kern = np.zeros_like(u)
    nz = u != 0.0
    kern[nz] = np.sign(u[nz]) * au[nz] ** (s - 1.0)
    eps = 0.0 if s >= 2.0 else 1e-10 * float(np.max(au))
    m2 = (u * u + eps * eps) ** ((s - 2.0) / 2.0)
    gval = s * (inv_sqrt_delta * (B.T @ (w * kern)))
    A = B * inv_sqrt_delta[None, :]
    hval = s * (s - 1.0) * ((A * (w * m2)[:, None]).T @ A)
    f = val ** (1.0 / s)
    c1 = (1.0 / s) * (1.0 / s - 1.0) * val ** (1.0 / s - 2.0)
    c2 = (1.0 / s) * val ** (1.0 / s - 1.0)
    return f, c2 * gval, c1 * np.outer(gval, gval) + c2 * hval


def _maximize_tail(B, w, inv_sqrt_delta, s, y, tol, max_iter):
    """Drive one start to a stationary point of the tail objective.

    A nonlinear power iteration (monotone ascent for the convex integral)
    carries the iterate near the maximizer; a projected Newton polish then
    collapses the projected gradient, which the power iteration alone
    cannot do along the nearly flat rotation orbits of the maximizer.
    Returns (f, y, converged).
    """
    f, gf = _ascent_objective(B, w, inv_sqrt_delta, s, y)
    gp = gf - np.dot(gf, y) * y
    thresh = tol * (1.0 + abs(f))
    for _ in range(max_iter):
        gnorm = float(np.linalg.norm(gp))
        if gnorm <= thresh:
            return f, y, True
        if gnorm <= 1e-5 * (1.0 + abs(f)):
            break
        gfn = float(np.linalg.norm(gf))
        if gfn == 0.0:
            return f, y, True
        y = gf / gfn
        f, gf = _ascent_objective(B, w, inv_sqrt_delta, s, y)
        gp = gf - np.dot(gf, y) * y
        thresh = tol * (1.0 + abs(f))
    for _ in range(60):
        gnorm = float(np.linalg.norm(gp))
        if gnorm <= thresh:
            return f, y, True
        _, gf_h, H = _ascent_hessian(B, w, inv_sqrt_delta, s, y)
        P = np.eye(y.shape[0]) - np.outer(y, y)
        Hr = P @ (H - np.dot(gf_h, y) * np.eye(y.shape[0])) @ P
        d = np.linalg.lstsq(Hr, -gp, rcond=1e-12)[0]
        d -= np.dot(d, y) * y
        improved = False
        for _ in range(20):
            cand = y + d
            cand /= np.linalg.norm(cand)
            fc, gc = _ascent_objective(B, w, inv_sqrt_delta, s, cand)
            gpc = gc - np.dot(gc, cand) * cand
            if np.linalg.norm(gpc) < gnorm:
                y, f, gf, gp = cand, fc, gc, gpc
                thresh = tol * (1.0 + abs(f))
                improved = True
                break
            d *= 0.5
        if not improved:
            break
    return f, y, float(np.linalg.norm(gp)) <= thresh


def embedding_constant(basis, rule, K, k, s, n_starts=8, tol=1e-10,
                       max_iter=20000, seed=0):
    """Discrete tail embedding constant on the span of modes ``k..K``.

    Maximizes the boundary L^s norm over the unit sphere of the exterior
    gradient norm.  After the substitution ``y = sqrt(delta) c`` the
    constraint sphere is Euclidean and the objective ``G(y) = int |u|^s``
    is convex, so the nonlinear power iteration ``y <- grad G / |grad G|``
    ascends monotonically; a projected Newton polish then drives the
    projected gradient to tolerance.  Runs from ``n_starts`` seeded random
    starts and returns the best value over the converged ones.

    Raises
    ------
    AscentStallError
        If no start drives the projected gradient below tolerance.
    """
    value, _ = _embedding_constant_vec(basis, rule, K, k, s, n_starts, tol,
                                       max_iter, seed)
    return value


def _embedding_constant_vec(basis, rule, K, k, s, n_starts, tol, max_iter,
                            seed, extra_starts=()):
    if not 1 <= k <= K <= basis.size:
        raise ValueError(f"need 1 <= k <= K <= {basis.size}, got k={k}, K={K}")
    if s < 1.0:
        raise ValueError(f"exponent s must be >= 1, got {s}")
    B = basis.trace_matrix(rule)[:, k - 1 : K]
    w = rule.weights
    isd = 1.0 / np.sqrt(basis.eigenvalues[k - 1 : K])
    m = K - k + 1
    rng = np.random.default_rng(seed)
    starts = [np.asarray(y, dtype=np.float64) for y in extra_starts]
    for _ in range(n_starts):
        y = rng.standard_normal(m)
        starts.append(y / np.linalg.norm(y))
    best = -np.inf
    best_y = None
    any_converged = False
    for y in starts:
        f, y_out, converged = _maximize_tail(B, w, isd, s, y, tol, max_iter)
        if converged:
            any_converged = True
            if f > best:
                best, best_y = f, y_out
    if not any_converged:
        raise AscentStallError(
            f"embedding ascent stalled above tolerance {tol} for all "
            f"{len(starts)} starts (k={k}, K={K}, s={s})"
        )
    return best, best_y


@dataclass(frozen=True, eq=False)
class EmbeddingConstants:
    """Tail constants alpha_k (exponent p) and beta_k (exponent q).

    Arrays are indexed by ``k - 1`` for ``k = 1..K``; ``c1 = beta_1`` and
    ``c2 = alpha_1`` are the full-span constants.  ``s2`` optionally holds
    the quadratic-exponent column used as an optimizer cross-check; its
    exact value is ``delta_k^(-1/2)``.
    """

    K: int
    q: float
    p: float
    alpha: np.ndarray
    beta: np.ndarray
    s2: np.ndarray | None = None

    @property
    def c1(self):
        return float(self.beta[0])

    @property
    def c2(self):
        return float(self.alpha[0])


def _tail_column(basis, rule, K, s, n_starts, tol, seed):
    """One exponent column, computed from the innermost tail outward.

    The maximizer of rung k + 1, zero-padded into span(k..K), seeds rung
    k; nestedness of the tails then carries the best value inward and
    keeps the column nonincreasing without relying on the random starts
    alone.
    """
    out = np.empty(K)
    carry = None
    for k in range(K, 0, -1):
        extra = [] if carry is None else [np.concatenate(([0.0], carry))]
        out[k - 1], carry = _embedding_constant_vec(
            basis, rule, K, k, s, n_starts, tol, 20000, seed,
            extra_starts=extra)
    return out


def compute_embedding_constants(basis, rule, K, q, p, n_starts=8, tol=1e-10,
                                seed=0, include_s2=False):
    """Tail constants alpha_k, beta_k for every rung k = 1..K."""
    alpha = _tail_column(basis, rule, K, p, n_starts, tol, seed)
    beta = _tail_column(basis, rule, K, q, n_starts, tol, seed)
    s2 = (_tail_column(basis, rule, K, 2.0, n_starts, tol, seed)
          if include_s2 else None)
    return EmbeddingConstants(K=K, q=q, p=p, alpha=alpha, beta=beta, s2=s2)


def convex_radii(constants, params, k):
    """(rho_k, varrho_k) of the convex branch; requires mu > 0."""
    if params.mu <= 0.0:
        raise ValueError("convex-branch fountain radii require mu > 0")
    a = float(constants.alpha[k - 1])
    varrho = (params.mu * a**params.p) ** (-1.0 / (params.p - 2.0))
    return 2.0 * varrho, varrho


def concave_radii(constants, params, k):
    """(dual rho_k, dual varrho_k) of the concave branch; requires lam > 0."""
    if params.lam <= 0.0:
        raise ValueError("concave-branch fountain radii require lam > 0")
    b = float(constants.beta[k - 1])
    rho = (4.0 * params.lam * b**params.q / params.q) ** (1.0 / (2.0 - params.q))
    return rho, 0.5 * rho


def fountain_radii(k, params, constants):
    """Radii (rho_k, varrho_k, dual rho_k, dual varrho_k) at rung ``k``.

    ``varrho_k = (mu alpha_k^p)^(-1/(p-2))`` with ``rho_k = 2 varrho_k``;
    dual ``rho_k = (4 lam beta_k^q / q)^(1/(2-q))`` with dual ``varrho_k``
    half of it.  Requires ``mu > 0`` for the first pair and ``lam > 0``
    for the second.
    """
    rho, varrho = convex_radii(constants, params, k)
    dual_rho, dual_varrho = concave_radii(constants, params, k)
    return rho, varrho, dual_rho, dual_varrho


def positive_energy_lower_bound(params, c2):
    """Gradient-norm floor for critical points of positive energy.

    Requires ``mu > 0``; ``c2`` is the full-span embedding constant for
    exponent p.
    """
    if params.mu <= 0.0:
        raise ValueError("the positive-energy bound requires mu > 0")
    q, p = params.q, params.p
    num = (1.0 / q - 0.5) / params.mu
    den = c2**p * (1.0 / q - 1.0 / p)
    return (num / den) ** (1.0 / (p - 2.0))


def negative_energy_upper_bound(params, c1):
    """Gradient-norm ceiling for critical points of negative energy.

    Requires ``lam > 0``; ``c1`` is the full-span embedding constant for
    exponent q.
    """
    if params.lam <= 0.0:
        raise ValueError("the negative-energy bound requires lam > 0")
    q, p = params.q, params.p
    num = params.lam * c1**q * (1.0 / q - 1.0 / p)
    den = 0.5 - 1.0 / p
    return (num / den) ** (1.0 / (2.0 - q))
