"""Analytic Steklov eigenpairs on the exterior of the unit ball.

The harmonic Steklov problem on the complement of the unit ball in R^N,
with the normal pointing toward the origin and decay at infinity, has
eigenvalues ``l + N - 2`` for integer degree ``l >= 0``.  The eigenspace of
degree ``l`` consists of the fields ``|x|^-(l+N-2) Y(x/|x|)`` with ``Y`` a
degree-``l`` spherical harmonic; in R^3 its dimension is ``2 l + 1``.

This module exposes the eigenvalue formula for every ``N >= 3`` and full
eigenfunction evaluation for ``N = 3`` through a real orthonormal
spherical-harmonic basis (unit surface L2 norm, no Condon-Shortley phase),
enumerated degree-major with flat 1-based index ``l^2 + (m + l) + 1``.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


def _check_dim(dim):
    if int(dim) != dim or dim < 3:
        raise ValueError(f"dimension must be an integer >= 3, got {dim!r}")
    return int(dim)


def _check_degree(degree):
    if int(degree) != degree or degree < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {degree!r}")
    return int(degree)


def eigenvalue(degree, dim=3):
    """Exterior Steklov eigenvalue ``l + N - 2`` of degree ``l`` in R^N."""
    return float(_check_degree(degree) + _check_dim(dim) - 2)


def multiplicity(degree, dim=3):
    """Eigenspace dimension of degree ``l``; implemented for N = 3 only."""
    if _check_dim(dim) != 3:
        raise NotImplementedError("eigenspace enumeration is implemented for N = 3 only")
    return 2 * _check_degree(degree) + 1


def radial_decay(degree, r, dim=3):
    """Radial factor ``r^-(l+N-2)`` of the decaying exterior extension."""
    delta = eigenvalue(degree, dim)
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 1.0 - 1e-12):
        raise ValueError("exterior radial profile requires r >= 1")
    return r ** (-delta)


@dataclass(frozen=True)
class ModeIndex:
    """Degree-major enumeration entry: flat index is 1-based."""

    flat: int
    degree: int
    order: int


def flat_index(degree, order):
    """Flat 1-based index of the (l, m) real harmonic."""
    degree = _check_degree(degree)
    if abs(order) > degree:
        raise ValueError(f"order {order} out of range for degree {degree}")
    return degree * degree + (order + degree) + 1


def mode_index(flat):
    """Inverse of :func:`flat_index`."""
    if int(flat) != flat or flat < 1:
        raise ValueError(f"flat mode index must be a positive integer, got {flat!r}")
    flat = int(flat)
    degree = int(np.floor(np.sqrt(flat - 1)))
    order = (flat - 1) - degree * degree - degree
    return ModeIndex(flat=flat, degree=degree, order=order)


_MODULE_BASES = {}


def _basis_for(degree):
    b = _MODULE_BASES.get(degree)
    if b is None:
        b = SteklovBasis(degree)
        _MODULE_BASES[degree] = b
    return b


def boundary_trace(mode, point):
    """Trace of the mode's eigenfunction at a unit-sphere point (N = 3).

    ``mode`` is a :class:`ModeIndex` or a flat 1-based index.
    """
    if not isinstance(mode, ModeIndex):
        mode = mode_index(mode)
    return _basis_for(mode.degree).boundary_trace(mode.flat, point)


def exterior_value(mode, point):
    """Decaying exterior eigenfunction of the mode at a point, |x| >= 1."""
    if not isinstance(mode, ModeIndex):
        mode = mode_index(mode)
    return _basis_for(mode.degree).exterior_value(mode.flat, point)


def _sphere_angles(points):
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
    r = np.linalg.norm(pts, axis=1)
    cos_theta = np.clip(pts[:, 2] / r, -1.0, 1.0)
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    return r, cos_theta, phi


class SteklovBasis:
    """Orthonormal exterior Steklov eigenbasis on the unit sphere in R^3.

    Parameters
    ----------
    lmax: int
        Highest harmonic degree; the basis holds ``(lmax+1)^2`` modes.
    dim: int
        Ambient dimension; evaluation is implemented for 3 only.
    """

    def __init__(self, lmax, dim=3):
        if int(lmax) != lmax or lmax < 0:
            raise ValueError(f"lmax must be a nonnegative integer, got {lmax!r}")
        if _check_dim(dim) != 3:
            raise NotImplementedError("basis evaluation is implemented for N = 3 only")
        self.lmax = int(lmax)
        self.dim = 3
        self.modes = tuple(
            mode_index(j) for j in range(1, (self.lmax + 1) ** 2 + 1)
        )
        self.eigenvalues = np.array(
            [eigenvalue(m.degree, 3) for m in self.modes]
        )
        self._trace_cache = {}

    @property
    def size(self):
        return len(self.modes)

    def mode(self, flat):
        if not 1 <= flat <= self.size:
            raise ValueError(f"flat index {flat} outside 1..{self.size}")
        return self.modes[flat - 1]

    def eigenvalue(self, flat):
        return float(self.eigenvalues[flat - 1])

    def boundary_trace(self, flat, points):
        """Values of mode ``flat`` at unit points (shape (n, 3) or (3,))."""
        self.mode(flat)
        r, cos_theta, phi = _sphere_angles(points)
        if np.any(np.abs(r - 1.0) > 1e-12):
            raise ValueError("boundary trace requires points on the unit sphere")
        table = kernels.sph_table(cos_theta, phi, self.lmax)
        vals = table[:, flat - 1]
        return vals if np.ndim(points) == 2 else float(vals[0])

    def exterior_value(self, flat, points):
        """Decaying exterior eigenfunction ``r^-delta Y`` at points, |x| >= 1."""
        m = self.mode(flat)
        r, cos_theta, phi = _sphere_angles(points)
        if np.any(r < 1.0 - 1e-12):
            raise ValueError("exterior evaluation requires |x| >= 1")
        table = kernels.sph_table(cos_theta, phi, self.lmax)
        vals = r ** (-self.eigenvalue(flat)) * table[:, flat - 1]
        return vals if np.ndim(points) == 2 else float(vals[0])

    def trace_matrix(self, rule):
        """(n_nodes, size) matrix of all mode traces at the rule's nodes.

        Cached per rule object; the cache key is identity, so reuse the
        same rule instance across calls.
        """
        key = id(rule)
        cached = self._trace_cache.get(key)
        if cached is None:
            cached = kernels.sph_table(rule.cos_theta, rule.phi, self.lmax)
            self._trace_cache[key] = cached
        return cached

    def gram_matrix(self, rule):
        """Quadrature Gram matrix B^T diag(w) B of the boundary traces."""
        B = self.trace_matrix(rule)
        return (B * rule.weights[:, None]).T @ B
