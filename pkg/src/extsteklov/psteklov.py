"""Exterior p-harmonic Steklov eigenvalues on truncated radial meshes.

The exterior domain is cut at a truncation radius R with a homogeneous
Dirichlet condition standing in for decay at infinity.  The first
eigenpair for general p comes from a normalized ascent flow on the unit
sphere of the gradient p-norm: each step moves along the duality element
u_B of the constrained derivative and renormalizes,

    H(v, t) = (v + t u_B) / ||v + t u_B||,

with phi ascending until ||u_B|| vanishes; then kappa = phi(limit) and
delta = 1/(p kappa).  At p = 2 the problem is linear and separable, and
the per-mode spectrum doubles as an independent cross-check.

Closed-form truncated values back every piece: the radial p-harmonic
profile gives delta(R) = ((a-1)/(1 - R^(1-a)))^(p-1) with
a = (N-1)/(p-1), whose R -> infinity limit is ((N-p)/(p-1))^(p-1), and
the substitution w = delta^(-1/(p-1)) is exactly affine in x = R^(1-a),
which is what the extrapolation exploits.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels


def sphere_area(dim):
    """Surface measure of the unit sphere in R^dim."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


BL_EXPONENT = 1.5
"""Boundary-layer exponent of the node map ``t -> R^(t^BL_EXPONENT)``."""


@dataclass(frozen=True, eq=False)
class RadialMesh:
    """Graded geometric radial mesh on [1, R].

    Nodes are ``r_i = R^((i/n)^g)`` with ``g = BL_EXPONENT``, so the
    first node is exactly 1, the last exactly R, and cells cluster near
    the inner boundary where the eigenfunctions concentrate.  The
    ``grading`` parameter caps the node ratio: the requested cell count
    is raised until ``R^(g/n) <= grading``, which bounds the ratio of
    every cell.
    """

    radius: float
    n_cells: int
    grading: float
    dim: int
    nodes: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    cell_weights: np.ndarray = field(repr=False)

    @property
    def ratio(self):
        return self.radius ** (BL_EXPONENT / self.n_cells)


def build_mesh(radius, n_cells=400, grading=1.15, dim=3):
    """Build the graded geometric mesh, enforcing the node-ratio cap ``grading``."""
    if not radius > 1.0:
        raise ValueError(f"truncation radius must exceed 1, got {radius}")
    if int(n_cells) != n_cells or n_cells < 2:
        raise ValueError(f"cell count must be an integer >= 2, got {n_cells!r}")
    if not grading > 1.0:
        raise ValueError(f"grading ratio must exceed 1, got {grading}")
    if int(dim) != dim or dim < 3:
        raise ValueError(f"dimension must be an integer >= 3, got {dim!r}")
    n = max(int(n_cells),
            int(np.ceil(BL_EXPONENT * np.log(radius) / np.log(grading))))
    nodes = radius ** ((np.arange(n + 1) / n) ** BL_EXPONENT)
    nodes[0] = 1.0
    nodes[-1] = radius
    h = np.diff(nodes)
    cellw = (nodes[1:] ** dim - nodes[:-1] ** dim) / dim
    return RadialMesh(radius=float(radius), n_cells=n, grading=float(grading),
                      dim=int(dim), nodes=nodes, h=h, cell_weights=cellw)


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Piecewise-linear radial profile with v(R) = 0.

    ``values`` holds the n free nodal values at ``r_0..r_(n-1)``; the value
    at the outer node is fixed to zero by the decay condition.
    """

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=np.float64))

    @property
    def boundary_value(self):
        return float(self.values[0])

    def __len__(self):
        return self.values.shape[0]


def _check_p(p, dim):
    if not 1.0 < p < dim:
        raise ValueError(f"exponent p must lie in (1, N) = (1, {dim}), got {p}")
    return float(p)


def _check_fn(v, mesh):
    vals = v.values if isinstance(v, RadialFunction) else np.asarray(v, float)
    if vals.shape[0] != mesh.n_cells:
        raise ValueError(
            f"radial function has {vals.shape[0]} values, mesh needs "
            f"{mesh.n_cells}"
        )
    return vals


def phi_psi(v, p, mesh):
    """Boundary and interior energies (phi, psi) of a radial profile.

    ``phi = (1/p) omega |v(1)|^p`` and ``psi = (1/p) omega sum_i
    |slope_i|^p int_cell r^(N-1) dr`` with the cell weight integrated
    exactly.
    """
    p = _check_p(p, mesh.dim)
    vals = _check_fn(v, mesh)
    omega = sphere_area(mesh.dim)
    psi, _ = kernels.pflow_psi_grad(vals, mesh.h, mesh.cell_weights, p)
    phi = omega / p * abs(vals[0]) ** p
    return phi, omega * psi


def gradient_p_norm(v, p, mesh):
    """Discrete gradient p-norm (p psi)^(1/p)."""
    _, psi = phi_psi(v, p, mesh)
    return (p * psi) ** (1.0 / p)


def normalized(v, p, mesh):
    """Rescale a nonzero profile to the unit sphere of the gradient p-norm."""
    vals = _check_fn(v, mesh)
    nrm = gradient_p_norm(vals, p, mesh)
    if nrm <= 0.0:
        raise ValueError("cannot normalize the zero profile")
    return RadialFunction(vals / nrm)


def _stiffness(mesh):
    n = mesh.n_cells
    cw = mesh.cell_weights / mesh.h**2
    d = np.empty(n)
    d[0] = cw[0]
    d[1:] = cw[:-1] + cw[1:]
    off = -cw[: n - 1]
    return off, d, off.copy()


def _duality(vals, p, mesh, omega):
    psi, gpsi = kernels.pflow_psi_grad(vals, mesh.h, mesh.cell_weights, p)
    phi = omega / p * abs(vals[0]) ** p
    b = -p * phi * omega * gpsi
    b[0] += omega * kernels.boundary_kernel(np.array([vals[0]]), p)[0]
    dl, d, du = _stiffness(mesh)
    u = kernels.tridiag_solve(dl, d, du, b)
    norm = math.sqrt(max(0.0, float(np.dot(u, b))))
    return u, norm, phi, omega * psi


def duality_element(v, p, mesh):
    """Riesz representer u_B of the constrained derivative at unit ``v``.

    The functional ``B_v(w) = phi'(v)(w) - p phi(v) psi'(v)(w)`` is
    represented in the weighted-H1 inner product ``<a, b> = int a'b'
    r^(N-1) dr``; one tridiagonal solve yields u_B, and ``B_v(u_B) =
    <u_B, u_B>`` holds by construction.  Requires ``v`` on the unit sphere
    of the gradient p-norm.
    """
    p = _check_p(p, mesh.dim)
    vals = _check_fn(v, mesh)
    nrm = gradient_p_norm(vals, p, mesh)
    if abs(nrm - 1.0) > 1e-6:
        raise ValueError(
            f"duality element requires a unit profile, gradient p-norm is "
            f"{nrm!r}"
        )
    u, _, _, _ = _duality(vals, p, mesh, sphere_area(mesh.dim))
    return RadialFunction(u)


class DegenerateStepError(RuntimeError):
    """Raised when the pre-normalization norm of a flow step collapses."""


def flow_step(v, t, p, mesh):
    """One normalized ascent step H(v, t) = (v + t u_B)/||v + t u_B||.

    ``t = 0`` returns ``v`` unchanged.  A pre-normalization gradient
    p-norm below 1e-14 raises :class:`DegenerateStepError` and the step
    must be rejected.
    """
    p = _check_p(p, mesh.dim)
    vals = _check_fn(v, mesh)
    if t == 0.0:
        return v if isinstance(v, RadialFunction) else RadialFunction(vals)
    u, _, _, _ = _duality(vals, p, mesh, sphere_area(mesh.dim))
    w = vals + t * u
    nrm = gradient_p_norm(w, p, mesh)
    if nrm < 1e-14:
        raise DegenerateStepError(
            f"gradient p-norm {nrm!r} collapsed at step size {t}"
        )
    return RadialFunction(w / nrm)


@dataclass(frozen=True, eq=False)
class PSteklovResult:
    """First discrete eigenpair of the truncated exterior problem."""

    p: float
    dim: int
    radius: float
    kappa: float
    delta: float
    eigenfunction: RadialFunction
    iterations: int
    residual: float
    converged: bool
    history: list = field(repr=False, default_factory=list)


def first_eigenpair(p, dim, mesh, tol=1e-5, max_steps=200000, t_init=0.1):
    """First eigenpair by the normalized ascent flow.

    Ascends phi on the unit sphere of the gradient p-norm with an adaptive
    step: start at ``t_init``, halve on a rejected (non-increasing or
    degenerate) step, double after 3 consecutive acceptances, floor at
    1e-12.  Stops when ``||u_B|| <= tol``; then ``kappa = phi(limit)`` and
    ``delta = 1/(p kappa)``.  The reported residual ``delta ||u_B||`` is
    the dual norm of the discrete weak form at the limit.

    Non-convergence within ``max_steps`` is reported through the
    ``converged`` flag and the flow history, not an exception.
    """
    p = _check_p(p, dim)
    if mesh.dim != dim:
        raise ValueError(f"mesh dimension {mesh.dim} does not match N = {dim}")
    omega = sphere_area(dim)
    vals = normalized(mesh.radius - mesh.nodes[:-1], p, mesh).values
    t = float(t_init)
    consec = 0
    history = []
    u, ub_norm, phi, _ = _duality(vals, p, mesh, omega)
    steps = 0
    converged = ub_norm <= tol
    while not converged and steps < max_steps:
        steps += 1
        w = vals + t * u
        nrm = gradient_p_norm(w, p, mesh)
        accept = nrm >= 1e-14
        if accept:
            w = w / nrm
            phi_new = omega / p * abs(w[0]) ** p
            accept = phi_new >= phi
        if accept:
            vals = w
            history.append((t, phi_new))
            consec += 1
            if consec >= 3:
                t = min(2.0 * t, 1e6)
                consec = 0
            u, ub_norm, phi, _ = _duality(vals, p, mesh, omega)
            if ub_norm <= tol:
                converged = True
        else:
            consec = 0
            t *= 0.5
            if t < 1e-12:
                break
    kappa = phi
    delta = 1.0 / (p * kappa)
    return PSteklovResult(p=p, dim=dim, radius=mesh.radius, kappa=kappa,
                          delta=delta, eigenfunction=RadialFunction(vals),
                          iterations=steps, residual=delta * ub_norm,
                          converged=converged, history=history)


def _mode_matrix(l, mesh):
    n = mesh.n_cells
    r0 = mesh.nodes[:-1]
    r1 = mesh.nodes[1:]
    dim = mesh.dim
    stiff = mesh.cell_weights / mesh.h**2
    gx = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
    gw = np.array([5.0, 8.0, 5.0]) / 9.0
    mid = 0.5 * (r0[:, None] + r1[:, None])
    half = 0.5 * mesh.h[:, None]
    r = mid + half * gx[None, :]
    wq = half * gw[None, :]
    tl = (r1[:, None] - r) / mesh.h[:, None]
    tr = (r - r0[:, None]) / mesh.h[:, None]
    coupling = float(l * (l + dim - 2))
    weight = coupling * r ** (dim - 3.0)
    m00 = np.sum(wq * weight * tl * tl, axis=1)
    m01 = np.sum(wq * weight * tl * tr, axis=1)
    m11 = np.sum(wq * weight * tr * tr, axis=1)
    d = np.empty(n)
    d[0] = stiff[0] + m00[0]
    d[1:] = stiff[:-1] + m11[:-1] + stiff[1:] + m00[1:]
    off = -stiff[: n - 1] + m01[: n - 1]
    return off, d, off.copy()


def p2_mode_spectrum(lmax, mesh, dim=3, threads=1):
    """Per-mode first eigenvalues of the truncated problem at p = 2.

    For each degree ``l <= lmax`` the radial problem has the tridiagonal
    stiffness ``int (a'b' + l(l+N-2) r^-2 a b) r^(N-1) dr`` with Dirichlet
    condition at R, and the boundary term is the rank-one matrix
    ``a(1) b(1)``; the smallest eigenvalue is therefore
    ``1 / (K^-1 e_0)_0``, one tridiagonal solve per mode.
    """
    if int(lmax) != lmax or lmax < 0:
        raise ValueError(f"lmax must be a nonnegative integer, got {lmax!r}")
    if mesh.dim != dim:
        raise ValueError(f"mesh dimension {mesh.dim} does not match N = {dim}")

    def solve_mode(l):
        dl, d, du = _mode_matrix(l, mesh)
        e0 = np.zeros(mesh.n_cells)
        e0[0] = 1.0
        x = kernels.tridiag_solve(dl, d, du, e0)
        lead = float(x[0])
        if not np.isfinite(lead) or lead <= 0.0:
            raise ArithmeticError(
                f"mode l={l}: eigensolve failed, boundary response {lead!r}"
            )
        return l, 1.0 / lead

    degrees = range(int(lmax) + 1)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(solve_mode, degrees))
    return [solve_mode(l) for l in degrees]


def closed_form_delta(p, dim, radius=None):
    """Analytic first eigenvalue of the radial truncated problem.

    With ``a = (N-1)/(p-1)`` the truncated value is
    ``((a-1)/(1-R^(1-a)))^(p-1)``; ``radius = None`` returns the exterior
    limit ``((N-p)/(p-1))^(p-1)``.  The borderline ``p = N`` (a = 1) is
    logarithmic; it already fails the 1 < p < N check, but values within
    rounding of N are rejected for finite radius before the formula
    degenerates to 0/0.
    """
    p = _check_p(p, dim)
    if radius is None:
        return ((dim - p) / (p - 1.0)) ** (p - 1.0)
    if not radius > 1.0:
        raise ValueError(f"truncation radius must exceed 1, got {radius}")
    a = (dim - 1.0) / (p - 1.0)
    if abs(a - 1.0) < 1e-14:
        raise ValueError("p = N is the logarithmic borderline case")
    return ((a - 1.0) / (1.0 - radius ** (1.0 - a))) ** (p - 1.0)


def closed_form_delta_p2(l, radius):
    """Analytic truncated p = 2 eigenvalue of degree l in R^3."""
    if not radius > 1.0:
        raise ValueError(f"truncation radius must exceed 1, got {radius}")
    s = radius ** (-(2.0 * l + 1.0))
    return ((l + 1.0) + l * s) / (1.0 - s)


def extrapolate_eigenvalue(p, dim, pairs):
    """Richardson extrapolation of truncated eigenvalues to R = infinity.

    For the radial profile the substitution ``w = delta^(-1/(p-1))`` is
    exactly affine in the truncation variable ``x = R^(1-a)``, so a linear
    fit of (x, w) extrapolated to x = 0 recovers the exterior eigenvalue.
    Requires at least two (R, delta) pairs; p within rounding of N makes
    ``a = 1`` and the fit variable constant, so it is rejected.
    """
    p = _check_p(p, dim)
    a = (dim - 1.0) / (p - 1.0)
    if abs(a - 1.0) < 1e-14:
        raise ValueError("p = N is the logarithmic borderline case")
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("extrapolation needs at least two (R, delta) pairs")
    x = np.array([r ** (1.0 - a) for r, _ in pairs])
    w = np.array([d ** (-1.0 / (p - 1.0)) for _, d in pairs])
    slope, intercept = np.polyfit(x, w, 1)
    if intercept <= 0.0:
        raise ArithmeticError(
            f"extrapolated transform intercept {intercept!r} is not positive"
        )
    return float(intercept ** (-(p - 1.0)))
