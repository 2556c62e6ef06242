"""Product quadrature on the unit sphere.

Gauss-Legendre nodes in the polar cosine crossed with equispaced azimuth
nodes.  A rule of polar order ``n`` uses ``2 n`` azimuth nodes, carries
``2 n^2`` points in total, and integrates spherical polynomials of degree
up to ``2 n - 1`` exactly.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class SphereRule:
    """Quadrature rule on the unit sphere in R^3.

    Attributes
    ----------
    order: int
        Number of Gauss-Legendre nodes in the polar direction.
    points: (n, 3) array
        Cartesian unit vectors of the quadrature nodes.
    weights: (n,) array
        Positive weights summing to the sphere area 4 pi.
    cos_theta, phi: (n,) arrays
        Spherical coordinates of the nodes.
    """

    order: int
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    cos_theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)

    @property
    def exactness(self):
        """Largest polynomial degree integrated exactly."""
        return 2 * self.order - 1

    def __len__(self):
        return self.weights.shape[0]


def build_rule(order):
    """Build the product rule with ``order`` polar nodes.

    Raises
    ------
    ValueError
        If ``order`` is not a positive integer.
    """
    if int(order) != order or order < 1:
        raise ValueError(f"quadrature order must be a positive integer, got {order!r}")
    order = int(order)
    x, wx = np.polynomial.legendre.leggauss(order)
    n_phi = 2 * order
    phi1 = 2.0 * np.pi * np.arange(n_phi) / n_phi
    cos_theta = np.repeat(x, n_phi)
    phi = np.tile(phi1, order)
    weights = np.repeat(wx, n_phi) * (np.pi / order)
    sin_theta = np.sqrt(np.maximum(0.0, 1.0 - cos_theta * cos_theta))
    points = np.column_stack(
        (sin_theta * np.cos(phi), sin_theta * np.sin(phi), cos_theta)
    )
    return SphereRule(order=order, points=points, weights=weights,
                      cos_theta=cos_theta, phi=phi)


def default_order(lmax):
    """Polar order used by the package for a basis truncated at ``lmax``.

    Exact for integrands of spherical-polynomial degree up to
    ``4 lmax + 15``, which covers products of four basis traces with
    margin.
    """
    return 2 * lmax + 8


def integrate(rule, f):
    """Integrate a scalar field over the sphere with ``rule``.

    ``f`` is either an array of node values or a callable; a callable is
    applied to the full ``(n, 3)`` point array and must return ``(n,)``
    values (a scalar-only callable is applied point by point as a
    fallback).

    Raises
    ------
    FloatingPointError
        If any node value is non-finite, reporting the first bad node.
    """
    if callable(f):
        try:
            vals = np.asarray(f(rule.points), dtype=np.float64)
            if vals.shape != rule.weights.shape:
                raise TypeError
        except (TypeError, ValueError):
            vals = np.array([float(f(pt)) for pt in rule.points])
    else:
        vals = np.asarray(f, dtype=np.float64)
        if vals.shape != rule.weights.shape:
            raise ValueError(
                f"value array has shape {vals.shape}, rule has {len(rule)} nodes"
            )
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise FloatingPointError(
            f"non-finite integrand value {vals[i]!r} at node {i}, "
            f"point {rule.points[i]}"
        )
    return float(np.dot(rule.weights, vals))
