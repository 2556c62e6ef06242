"""Exterior harmonic Steklov expansions and concave-convex boundary energies.

The package computes, on the exterior of the unit ball:

- the analytic Steklov spectrum and its real spherical-harmonic
  eigenbasis (:mod:`extsteklov.basis`, :mod:`extsteklov.quadrature`);
- critical points of the boundary energy with a concave-convex
  nonlinearity, by deflated multistart Newton over the subspace ladder
  of the fountain geometry (:mod:`extsteklov.energy`,
  :mod:`extsteklov.critical`);
- first p-harmonic Steklov eigenpairs on truncated radial domains via a
  normalized ascent flow, with the full separable spectrum at p = 2
  (:mod:`extsteklov.psteklov`).

Hot kernels run under numba when available; set ``EXTSTEKLOV_BACKEND``
to ``numpy`` or ``numba`` to pick explicitly.
"""

from . import kernels
from .basis import (
    ModeIndex,
    SteklovBasis,
    boundary_trace,
    eigenvalue,
    exterior_value,
    flat_index,
    mode_index,
    multiplicity,
    radial_decay,
)
from .config import ConfigError, RunConfig, parse_config_file, resolve_config, validate_config
from .critical import (
    FountainLadder,
    Prop31Entry,
    RefineFailure,
    SolutionRecord,
    boundary_residual,
    bvp_residual,
    check_prop31,
    deduplicate,
    fountain_scan,
    radial_solutions,
    radial_trace_values,
    refine,
    sign_class,
)
from .energy import (
    AscentStallError,
    EmbeddingConstants,
    EnergyParams,
    HarmonicElement,
    boundary_power,
    compute_embedding_constants,
    concave_radii,
    convex_radii,
    embedding_constant,
    energy_gradient,
    energy_hessian,
    energy_value,
    fountain_radii,
    negative_energy_upper_bound,
    positive_energy_lower_bound,
    ps_identity,
    trace_critical_exponent,
)
from .psteklov import (
    DegenerateStepError,
    PSteklovResult,
    RadialFunction,
    RadialMesh,
    build_mesh,
    closed_form_delta,
    closed_form_delta_p2,
    duality_element,
    extrapolate_eigenvalue,
    first_eigenpair,
    flow_step,
    gradient_p_norm,
    normalized,
    p2_mode_spectrum,
    phi_psi,
    sphere_area,
)
from .quadrature import SphereRule, build_rule, default_order, integrate

__version__ = "0.1.0"

__all__ = [
    "AscentStallError",
    "ConfigError",
    "DegenerateStepError",
    "EmbeddingConstants",
    "EnergyParams",
    "FountainLadder",
    "HarmonicElement",
    "ModeIndex",
    "PSteklovResult",
    "Prop31Entry",
    "RadialFunction",
    "RadialMesh",
    "RefineFailure",
    "RunConfig",
    "SolutionRecord",
    "SphereRule",
    "SteklovBasis",
    "boundary_power",
    "boundary_residual",
    "boundary_trace",
    "build_mesh",
    "build_rule",
    "bvp_residual",
    "check_prop31",
    "closed_form_delta",
    "closed_form_delta_p2",
    "compute_embedding_constants",
    "concave_radii",
    "convex_radii",
    "deduplicate",
    "default_order",
    "duality_element",
    "eigenvalue",
    "embedding_constant",
    "energy_gradient",
    "energy_hessian",
    "energy_value",
    "exterior_value",
    "extrapolate_eigenvalue",
    "first_eigenpair",
    "flat_index",
    "flow_step",
    "fountain_radii",
    "fountain_scan",
    "gradient_p_norm",
    "integrate",
    "kernels",
    "mode_index",
    "multiplicity",
    "negative_energy_upper_bound",
    "normalized",
    "p2_mode_spectrum",
    "parse_config_file",
    "phi_psi",
    "positive_energy_lower_bound",
    "ps_identity",
    "radial_decay",
    "radial_solutions",
    "radial_trace_values",
    "refine",
    "resolve_config",
    "sign_class",
    "sphere_area",
    "trace_critical_exponent",
    "validate_config",
]
