"""Deflated multistart search for critical points of the boundary energy.

Starts are placed on the nested subspace ladder: negative-branch starts on
spheres of radius dual-varrho_k inside Y_k = span(modes 1..k), positive-
branch starts on spheres of radius varrho_k inside Z_k = span(modes k..K),
mirroring where the fountain geometry locates the critical levels.  Each
start is refined by a damped Newton iteration on the gradient, converged
records are deduplicated up to sign, classified by energy sign, and checked
against the norm bounds that every sign-definite critical point must obey.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .energy import (
    EmbeddingConstants,
    HarmonicElement,
    compute_embedding_constants,
    concave_radii,
    convex_radii,
    energy_gradient,
    energy_hessian,
    energy_value,
    negative_energy_upper_bound,
    positive_energy_lower_bound,
)
from . import kernels

SIGN_DEAD_BAND = 1e-10
DIVERGENCE_NORM = 1e6

START_KINDS = ("Y-ball", "Z-sphere", "random")


@dataclass(frozen=True, eq=False)
class SolutionRecord:
    """A converged critical point with provenance of the search."""

    element: HarmonicElement
    params: object
    energy: float
    gradient_norm: float
    sign_class: str
    rung: int
    start_kind: str
    bvp_residual: float
    iterations: int


@dataclass(frozen=True, eq=False)
class RefineFailure:
    """Terminal state of a start that did not converge."""

    element: HarmonicElement
    reason: str
    gradient_norm: float
    iterations: int
    rung: int = 0
    start_kind: str = "random"


def sign_class(phi):
    """Energy sign with dead-band |phi| < 1e-10 mapping to 'zero'."""
    if phi > SIGN_DEAD_BAND:
        return "positive"
    if phi < -SIGN_DEAD_BAND:
        return "negative"
    return "zero"


def boundary_residual(element, params, rule):
    """Boundary L2 norm of the strong-form boundary-condition residual.

    The normal derivative of the harmonic extension is ``sum delta_j c_j
    s_j`` on the boundary, so the residual at the quadrature nodes is
    ``sum delta_j c_j s_j - lam |u|^(q-2) u - mu |u|^(p-2) u``.
    """
    B = element.basis.trace_matrix(rule)[:, : element.K]
    vals = B @ element.coeffs
    resid = B @ (element.basis.eigenvalues[: element.K] * element.coeffs)
    if params.lam != 0.0:
        resid = resid - params.lam * kernels.boundary_kernel(vals, params.q)
    if params.mu != 0.0:
        resid = resid - params.mu * kernels.boundary_kernel(vals, params.p)
    return float(np.sqrt(np.dot(rule.weights, resid * resid)))


def bvp_residual(record, rule):
    """Strong-form boundary residual of a record, recomputed on ``rule``."""
    return boundary_residual(record.element, record.params, rule)


def _record(element, params, rule, g, iterations, rung, start_kind):
    phi = energy_value(element, params, rule)
    return SolutionRecord(
        element=element,
        params=params,
        energy=phi,
        gradient_norm=float(np.linalg.norm(g)),
        sign_class=sign_class(phi),
        rung=rung,
        start_kind=start_kind,
        bvp_residual=boundary_residual(element, params, rule),
        iterations=iterations,
    )


def refine(start, params, rule, tol=1e-9, max_iter=200, eps=1e-10,
           rung=0, start_kind="random"):
    """Drive the energy gradient to zero from ``start`` by damped Newton.

    The merit function is half the squared gradient norm.  The Newton
    direction (with ridge regularization when the solve fails) is always a
    merit descent direction for a symmetric Hessian; Armijo backtracking
    with factor 0.5 and slope 1e-4 damps it, and steepest descent on the
    merit is the fallback when the Newton step stalls.

    Returns a :class:`SolutionRecord` on convergence, else a
    :class:`RefineFailure` carrying the last iterate and the reason
    (``max_iterations``, ``line_search_stall``, or ``diverged``).
    """
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    basis = start.basis
    c = start.coeffs.copy()
    g = energy_gradient(HarmonicElement(basis, c), params, rule)
    merit = 0.5 * float(np.dot(g, g))
    for it in range(max_iter):
        gnorm = np.sqrt(2.0 * merit)
        if gnorm <= tol:
            return _record(HarmonicElement(basis, c), params, rule, g,
                           it, rung, start_kind)
        u = HarmonicElement(basis, c)
        if u.grad_norm > DIVERGENCE_NORM:
            return RefineFailure(element=u, reason="diverged",
                                 gradient_norm=gnorm, iterations=it,
                                 rung=rung, start_kind=start_kind)
        H = energy_hessian(u, params, rule, eps=eps)
        step = None
        ridge = 0.0
        scale = float(np.max(np.abs(H))) or 1.0
        for _ in range(8):
            try:
                cand = np.linalg.solve(H + ridge * np.eye(H.shape[0]), -g)
            except np.linalg.LinAlgError:
                cand = None
            if cand is not None and np.all(np.isfinite(cand)):
                step = cand
                break
            ridge = max(2.0 * ridge, 1e-12 * scale)
        accepted = False
        if step is not None:
            slope = float(np.dot(H @ g, step))
            if slope < 0.0:
                accepted, c, g, merit = _armijo(basis, params, rule, c, g,
                                                merit, step, slope)
        if not accepted:
            d = -(H @ g)
            slope = -float(np.dot(d, d))
            if slope < 0.0:
                accepted, c, g, merit = _armijo(basis, params, rule, c, g,
                                                merit, d, slope)
            if not accepted:
                return RefineFailure(element=HarmonicElement(basis, c),
                                     reason="line_search_stall",
                                     gradient_norm=gnorm, iterations=it,
                                     rung=rung, start_kind=start_kind)
    g = energy_gradient(HarmonicElement(basis, c), params, rule)
    gnorm = float(np.linalg.norm(g))
    if gnorm <= tol:
        return _record(HarmonicElement(basis, c), params, rule, g,
                       max_iter, rung, start_kind)
    return RefineFailure(element=HarmonicElement(basis, c),
                         reason="max_iterations", gradient_norm=gnorm,
                         iterations=max_iter, rung=rung, start_kind=start_kind)


def _armijo(basis, params, rule, c, g, merit, d, slope):
    t = 1.0
    for _ in range(40):
        c_new = c + t * d
        g_new = energy_gradient(HarmonicElement(basis, c_new), params, rule)
        m_new = 0.5 * float(np.dot(g_new, g_new))
        if m_new <= merit + 1e-4 * t * slope:
            return True, c_new, g_new, m_new
        t *= 0.5
    return False, c, g, merit


def radial_trace_values(params, dim=3, c_max=1e8):
    """Positive roots v of ``delta_1 v = lam v^(q-1) + mu v^(p-1)``.

    These are the boundary values of the constant-trace critical points;
    roots are located by scanning a log grid on ``(0, c_max]`` for sign
    changes and bisecting each bracket.
    """
    delta1 = float(dim - 2)

    def f(v):
        out = delta1 * v
        if params.lam != 0.0:
            out -= params.lam * v ** (params.q - 1.0)
        if params.mu != 0.0:
            out -= params.mu * v ** (params.p - 1.0)
        return out

    grid = np.logspace(-10, np.log10(c_max), 2001)
    vals = np.array([f(v) for v in grid])
    roots = []
    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0.0:
            for _ in range(200):
                mid = 0.5 * (a + b)
                fm = f(mid)
                if fm == 0.0:
                    a = b = mid
                    break
                if fa * fm < 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
    if vals[-1] == 0.0:
        roots.append(grid[-1])
    dedup = []
    for r in roots:
        if not dedup or abs(r - dedup[-1]) > 1e-12 * (1.0 + abs(r)):
            dedup.append(r)
    return dedup


def radial_solutions(params, basis=None, rule=None):
    """Exact constant-trace solutions lifted to mode (0, 0), as +/- pairs.

    The continuum solution with boundary trace identically v has the single
    coefficient ``c = v sqrt(4 pi)`` on the constant mode; both signs are
    returned.  Empty when the scalar equation has no positive root.  When
    ``basis`` or ``rule`` is omitted a minimal one is built; any rule is
    exact on constant traces.
    """
    if params.dim != 3:
        raise ValueError("radial solutions are implemented for N = 3 only")
    if basis is None:
        from .basis import SteklovBasis

        basis = SteklovBasis(0)
    if rule is None:
        from .quadrature import build_rule, default_order

        rule = build_rule(default_order(basis.lmax))
    records = []
    for v in radial_trace_values(params, dim=3):
        coeff = v * np.sqrt(4.0 * np.pi)
        for s in (1.0, -1.0):
            element = HarmonicElement(basis, np.array([s * coeff]))
            g = energy_gradient(element, params, rule)
            records.append(_record(element, params, rule, g, 0, 1, "random"))
    return records


def _dedup_key_distance(basis, a, b):
    K = max(a.shape[0], b.shape[0])
    pa = np.zeros(K)
    pa[: a.shape[0]] = a
    pb = np.zeros(K)
    pb[: b.shape[0]] = b
    delta = basis.eigenvalues[:K]
    d_minus = np.sqrt(np.dot(delta, (pa - pb) ** 2))
    d_plus = np.sqrt(np.dot(delta, (pa + pb) ** 2))
    return min(d_minus, d_plus)


def deduplicate(basis, records, tol=1e-6):
    """Drop records that coincide with an earlier one up to sign.

    Two records coincide when ``min(|c - c'|, |c + c'|) <= tol (1 + |c|)``
    in the eigenvalue-weighted coefficient norm; the first representative
    of each +/- pair is kept.
    """
    kept = []
    for rec in records:
        dup = False
        for other in kept:
            thresh = tol * (1.0 + other.element.grad_norm)
            if _dedup_key_distance(basis, other.element.coeffs,
                                   rec.element.coeffs) <= thresh:
                dup = True
                break
        if not dup:
            kept.append(rec)
    return kept


@dataclass(eq=False)
class FountainLadder:
    """Output of a fountain scan over the subspace ladder."""

    K: int
    params: object
    constants: EmbeddingConstants
    radii: list
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    seed: int = 0
    n_starts: int = 0

    def by_sign(self, sign):
        return [r for r in self.records if r.sign_class == sign]

    def distinct_energies(self, sign, rtol=1e-7):
        """Sorted distinct critical values of the given sign class."""
        energies = sorted(r.energy for r in self.by_sign(sign))
        out = []
        for e in energies:
            if not out or abs(e - out[-1]) > rtol * (1.0 + abs(e)):
                out.append(e)
        return out


def _rung_radii(constants, params, K):
    radii = []
    for k in range(1, K + 1):
        row = {"k": k, "rho": None, "varrho": None,
               "dual_rho": None, "dual_varrho": None}
        if params.mu > 0.0:
            row["rho"], row["varrho"] = convex_radii(constants, params, k)
        if params.lam > 0.0:
            row["dual_rho"], row["dual_varrho"] = concave_radii(
                constants, params, k)
        radii.append(row)
    return radii


def _scale_to_norm(basis, coeffs, radius):
    nrm = np.sqrt(np.dot(basis.eigenvalues[: coeffs.shape[0]], coeffs**2))
    return coeffs * (radius / nrm)


def fountain_scan(basis, rule, params, K, starts_per_rung=12, seed=0,
                  tol=1e-9, max_iter=200, eps=1e-10, dedup_tol=1e-6,
                  threads=1, constants=None):
    """Deflated multistart critical-point search over the subspace ladder.

    For each rung ``k = 1..K`` the scan launches ``starts_per_rung`` random
    starts: on the sphere of radius dual-varrho_k inside Y_k when lam > 0
    (negative branch) and on the sphere of radius varrho_k inside
    Z_k = span(modes k..K) when mu > 0 (positive branch); when neither
    branch is enabled the starts are unit-norm random elements.  The exact
    constant-trace solutions, when they exist, are injected as additional
    deterministic starts.  Every start is refined, failures are recorded,
    and converged records are deduplicated up to sign.

    All randomness derives from the single ``seed``; with ``threads = 1``
    reruns are bit-identical.
    """
    if K < 4:
        raise ValueError(f"ladder truncation K must be at least 4, got {K}")
    if K > basis.size:
        raise ValueError(f"K = {K} exceeds basis size {basis.size}")
    ss = np.random.SeedSequence(seed)
    ss_constants, ss_starts = ss.spawn(2)
    if constants is None:
        constants = compute_embedding_constants(
            basis, rule, K, params.q, params.p,
            seed=ss_constants.generate_state(1)[0])
    radii = _rung_radii(constants, params, K)
    rng = np.random.default_rng(ss_starts)

    starts = []
    for v in radial_trace_values(params, dim=params.dim):
        c = np.zeros(K)
        c[0] = v * np.sqrt(4.0 * np.pi)
        starts.append((1, "random", c))
    for k in range(1, K + 1):
        row = radii[k - 1]
        kinds = []
        if params.lam > 0.0:
            kinds.append("Y-ball")
        if params.mu > 0.0:
            kinds.append("Z-sphere")
        if not kinds:
            kinds.append("random")
        shares = np.full(len(kinds), starts_per_rung // len(kinds))
        shares[: starts_per_rung % len(kinds)] += 1
        for kind, n_kind in zip(kinds, shares):
            for _ in range(int(n_kind)):
                c = np.zeros(K)
                if kind == "Y-ball":
                    c[:k] = rng.standard_normal(k)
                    c = _scale_to_norm(basis, c, row["dual_varrho"])
                elif kind == "Z-sphere":
                    c[k - 1 :] = rng.standard_normal(K - k + 1)
                    c = _scale_to_norm(basis, c, row["varrho"])
                else:
                    c[:] = rng.standard_normal(K)
                    c = _scale_to_norm(basis, c, 1.0)
                starts.append((k, kind, c))

    def run(job):
        k, kind, c = job
        return refine(HarmonicElement(basis, c), params, rule, tol=tol,
                      max_iter=max_iter, eps=eps, rung=k, start_kind=kind)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, starts))
    else:
        outcomes = [run(job) for job in starts]

    converged = [o for o in outcomes if isinstance(o, SolutionRecord)]
    failures = [o for o in outcomes if isinstance(o, RefineFailure)]
    records = deduplicate(basis, converged, tol=dedup_tol)
    return FountainLadder(K=K, params=params, constants=constants,
                          radii=radii, records=records, failures=failures,
                          seed=seed, n_starts=len(starts))


@dataclass(frozen=True)
class Prop31Entry:
    """Norm-bound check for one sign-definite record."""

    index: int
    sign_class: str
    norm: float
    bound: float | None
    margin: float | None
    ok: bool
    note: str


def check_prop31(records, params, constants):
    """Check the sign-definite norm bounds against a list of records.

    Positive-energy records must satisfy the lower bound built from the
    full-span constant c2 (valid only when mu > 0; a positive-energy record
    with mu <= 0 contradicts the theory and is flagged).  Negative-energy
    records must satisfy the upper bound built from c1 (lam > 0), with the
    symmetric flag at lam <= 0.  Zero-class records are skipped.
    """
    entries = []
    for i, rec in enumerate(records):
        nrm = rec.element.grad_norm
        if rec.sign_class == "positive":
            if params.mu <= 0.0:
                entries.append(Prop31Entry(i, "positive", nrm, None, None,
                                           False,
                                           "positive energy with mu <= 0 "
                                           "contradicts the nonexistence "
                                           "result"))
                continue
            bound = positive_energy_lower_bound(params, constants.c2)
            margin = nrm - bound
            entries.append(Prop31Entry(i, "positive", nrm, bound, margin,
                                       margin >= 0.0, "lower bound"))
        elif rec.sign_class == "negative":
            if params.lam <= 0.0:
                entries.append(Prop31Entry(i, "negative", nrm, None, None,
                                           False,
                                           "negative energy with lam <= 0 "
                                           "contradicts the nonexistence "
                                           "result"))
                continue
            bound = negative_energy_upper_bound(params, constants.c1)
            margin = bound - nrm
            entries.append(Prop31Entry(i, "negative", nrm, bound, margin,
                                       margin >= 0.0, "upper bound"))
    return entries
