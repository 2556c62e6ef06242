"""Truncated radial meshes, the duality flow, and p = 2 cross-checks."""

import math

import numpy as np
import pytest

from extsteklov import (
    DegenerateStepError,
    RadialFunction,
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

FOUR_PI = 4.0 * math.pi


def linear_profile(mesh):
    """The ramp R - r, vanishing at the outer boundary."""
    return RadialFunction(mesh.radius - mesh.nodes[:-1])


class TestSphereArea:
    def test_known_values(self):
        assert sphere_area(3) == pytest.approx(FOUR_PI, rel=1e-15)
        assert sphere_area(4) == pytest.approx(2.0 * math.pi**2, rel=1e-15)


class TestBuildMesh:
    def test_endpoints_exact(self):
        mesh = build_mesh(11.0, n_cells=50)
        assert mesh.nodes[0] == 1.0
        assert mesh.nodes[-1] == 11.0
        assert mesh.n_cells == 50
        assert np.all(np.diff(mesh.nodes) > 0.0)

    def test_cell_weights_integrate_r2(self):
        mesh = build_mesh(5.0, n_cells=20)
        assert float(mesh.cell_weights.sum()) == pytest.approx(
            (5.0**3 - 1.0) / 3.0, rel=1e-13)

    def test_ratio_cap_raises_cell_count(self):
        mesh = build_mesh(1e6, n_cells=2, grading=1.05)
        assert mesh.n_cells > 2
        ratios = mesh.nodes[1:] / mesh.nodes[:-1]
        assert float(ratios.max()) <= 1.05 * (1.0 + 1e-12)
        assert float(ratios.max()) <= mesh.ratio * (1.0 + 1e-12)

    def test_boundary_layer_clustering(self):
        mesh = build_mesh(11.0, n_cells=100)
        assert mesh.h[0] < mesh.h[-1] / 10.0

    @pytest.mark.parametrize(
        "kwargs",
        [dict(radius=1.0), dict(radius=11.0, n_cells=1),
         dict(radius=11.0, grading=1.0), dict(radius=11.0, dim=2)])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            build_mesh(**kwargs)


class TestPhiPsi:
    def test_boundary_term(self):
        mesh = build_mesh(11.0, n_cells=64)
        for p in (1.5, 2.0, 2.5):
            v = np.zeros(mesh.n_cells)
            v[0] = 1.0
            phi, _ = phi_psi(v, p, mesh)
            assert phi == pytest.approx(FOUR_PI / p, rel=1e-14)

    def test_interior_term_linear_ramp(self):
        # Slope -1 on every cell: psi = (omega/p) * (R^3 - 1)/3.
        mesh = build_mesh(7.0, n_cells=64)
        v = linear_profile(mesh)
        for p in (1.5, 2.0, 2.5):
            _, psi = phi_psi(v, p, mesh)
            want = FOUR_PI / p * (7.0**3 - 1.0) / 3.0
            assert psi == pytest.approx(want, rel=1e-13)

    def test_p_range_guard(self):
        mesh = build_mesh(11.0, n_cells=16)
        for p in (1.0, 3.0, 0.5):
            with pytest.raises(ValueError):
                phi_psi(np.ones(16), p, mesh)

    def test_wrong_length_rejected(self):
        mesh = build_mesh(11.0, n_cells=16)
        with pytest.raises(ValueError):
            phi_psi(np.ones(7), 2.0, mesh)


class TestNormalized:
    def test_unit_gradient_norm(self):
        mesh = build_mesh(11.0, n_cells=64)
        for p in (1.5, 2.0, 2.5):
            v = normalized(linear_profile(mesh), p, mesh)
            assert gradient_p_norm(v, p, mesh) == pytest.approx(1.0, abs=1e-13)

    def test_zero_profile_rejected(self):
        mesh = build_mesh(11.0, n_cells=16)
        with pytest.raises(ValueError):
            normalized(np.zeros(16), 2.0, mesh)


class TestDualityElement:
    def test_vanishes_at_eigenfunction(self):
        mesh = build_mesh(11.0, n_cells=200)
        res = first_eigenpair(2.0, 3, mesh, tol=1e-7)
        assert res.converged
        u = duality_element(res.eigenfunction, 2.0, mesh)
        assert gradient_p_norm(u.values, 2.0, mesh) < 1e-5

    def test_requires_unit_profile(self):
        mesh = build_mesh(11.0, n_cells=32)
        with pytest.raises(ValueError, match="unit profile"):
            duality_element(linear_profile(mesh), 2.0, mesh)

    def test_first_order_ascent_rate(self):
        # phi(H(v,t)) - phi(v) = t ||u_B||^2 + o(t): the Riesz norm of the
        # duality element is the ascent rate of the flow.  The Riesz inner
        # product int a'b' r^2 dr carries no sphere-area factor, while the
        # gradient p-norm does, hence the 4 pi.
        mesh = build_mesh(11.0, n_cells=100)
        p = 2.5
        v = normalized(linear_profile(mesh), p, mesh)
        u = duality_element(v, p, mesh)
        nb2 = gradient_p_norm(u.values, 2.0, mesh) ** 2 / FOUR_PI
        phi0, _ = phi_psi(v.values, p, mesh)
        t = 1e-6
        phi1, _ = phi_psi(flow_step(v, t, p, mesh).values, p, mesh)
        assert (phi1 - phi0) / t == pytest.approx(nb2, rel=1e-4)


class TestFlowStep:
    def test_zero_step_is_identity(self):
        mesh = build_mesh(11.0, n_cells=64)
        v = normalized(linear_profile(mesh), 2.0, mesh)
        w = flow_step(v, 0.0, 2.0, mesh)
        assert np.array_equal(w.values, v.values)

    def test_unit_norm_preserved(self, rng):
        mesh = build_mesh(11.0, n_cells=64)
        p = 1.5
        v = normalized(rng.standard_normal(64), p, mesh)
        for _ in range(20):
            v = flow_step(v, 1e-2, p, mesh)
            assert abs(gradient_p_norm(v.values, p, mesh) - 1.0) <= 1e-13

    def test_oddness(self, rng):
        mesh = build_mesh(11.0, n_cells=64)
        p = 2.5
        v = normalized(rng.standard_normal(64), p, mesh)
        w_plus = flow_step(v, 1e-3, p, mesh)
        w_minus = flow_step(RadialFunction(-v.values), 1e-3, p, mesh)
        np.testing.assert_allclose(w_minus.values, -w_plus.values,
                                   rtol=0, atol=1e-14)

    def test_degenerate_collapse(self):
        # Stepping from v with t chosen so v + t u_B crosses zero slope
        # everywhere is impossible generically, so build the collapse by
        # hand: v and u_B = -v/t after one crafted linear solve is not
        # reachable through the public API; instead check the guard on a
        # profile whose update cancels it numerically.
        mesh = build_mesh(11.0, n_cells=8)
        v = normalized(linear_profile(mesh), 2.0, mesh)
        u = duality_element(v, 2.0, mesh)
        coeff = -float(v.values[0]) / float(u.values[0])
        w = v.values + coeff * u.values
        if gradient_p_norm(w, 2.0, mesh) < 1e-14:
            with pytest.raises(DegenerateStepError):
                flow_step(v, coeff, 2.0, mesh)
        else:
            pytest.skip("crafted step does not collapse on this mesh")


class TestFirstEigenpair:
    def test_p2_matches_closed_form(self):
        mesh = build_mesh(11.0, n_cells=400)
        res = first_eigenpair(2.0, 3, mesh, tol=1e-7)
        assert res.converged
        assert res.delta == pytest.approx(closed_form_delta_p2(0, 11.0),
                                          rel=1e-4)

    def test_p2_consistent_with_mode_solve(self):
        mesh = build_mesh(11.0, n_cells=400)
        res = first_eigenpair(2.0, 3, mesh, tol=1e-7)
        mode0 = dict(p2_mode_spectrum(0, mesh))[0]
        assert res.delta == pytest.approx(mode0, abs=1e-8)

    def test_truncation_convergence(self):
        # The truncated eigenvalue approaches the exterior closed form as
        # R grows, and matches the truncated closed form at every R.
        p = 1.5
        errs = []
        for R in (5.0, 11.0, 21.0):
            res = first_eigenpair(p, 3, build_mesh(R, n_cells=400))
            assert res.converged
            assert res.delta == pytest.approx(
                closed_form_delta(p, 3, R), rel=1e-4)
            errs.append(abs(res.delta - closed_form_delta(p, 3)))
        assert errs[0] > errs[1] > errs[2]

    def test_result_fields(self):
        mesh = build_mesh(11.0, n_cells=100)
        res = first_eigenpair(2.5, 3, mesh)
        assert res.p == 2.5 and res.dim == 3 and res.radius == 11.0
        assert res.delta == pytest.approx(1.0 / (2.5 * res.kappa), rel=1e-14)
        assert res.iterations >= len(res.history)
        assert res.residual >= 0.0
        assert len(res.eigenfunction) == mesh.n_cells

    def test_p_out_of_range(self):
        mesh = build_mesh(11.0, n_cells=16)
        for p in (1.0, 3.0, 3.5):
            with pytest.raises(ValueError):
                first_eigenpair(p, 3, mesh)

    def test_mesh_dim_mismatch(self):
        mesh = build_mesh(11.0, n_cells=16, dim=4)
        with pytest.raises(ValueError, match="dimension"):
            first_eigenpair(2.0, 3, mesh)


class TestP2ModeSpectrum:
    def test_matches_closed_form(self):
        mesh = build_mesh(11.0, n_cells=400)
        for l, delta in p2_mode_spectrum(10, mesh):
            assert delta == pytest.approx(closed_form_delta_p2(l, 11.0),
                                          rel=1e-4)

    def test_increasing_in_degree(self):
        mesh = build_mesh(11.0, n_cells=200)
        deltas = [d for _, d in p2_mode_spectrum(8, mesh)]
        assert all(a < b for a, b in zip(deltas, deltas[1:]))

    def test_threaded_matches_serial(self):
        mesh = build_mesh(11.0, n_cells=200)
        serial = p2_mode_spectrum(6, mesh, threads=1)
        threaded = p2_mode_spectrum(6, mesh, threads=4)
        assert serial == threaded


class TestClosedForms:
    def test_p2_limit(self):
        # delta_l(R) -> l + 1 as R -> infinity.
        for l in (0, 1, 4):
            assert closed_form_delta_p2(l, 1e9) == pytest.approx(
                l + 1.0, rel=1e-8)
        assert closed_form_delta_p2(0, 11.0) == pytest.approx(1.1, rel=1e-15)

    def test_exterior_values(self):
        assert closed_form_delta(2.0, 3) == pytest.approx(1.0, rel=1e-15)
        assert closed_form_delta(1.5, 3) == pytest.approx(
            math.sqrt(3.0), rel=1e-12)
        assert closed_form_delta(2.5, 3) == pytest.approx(
            (1.0 / 3.0) ** 1.5, rel=1e-12)

    def test_truncated_value(self):
        p, R = 1.5, 21.0
        a = 2.0 / (p - 1.0)
        want = ((a - 1.0) / (1.0 - R ** (1.0 - a))) ** (p - 1.0)
        assert closed_form_delta(p, 3, R) == pytest.approx(want, rel=1e-14)


class TestExtrapolation:
    def test_exact_on_synthetic_data(self):
        # The truncated closed form is exactly affine in the extrapolation
        # variable, so two exact samples recover the exterior value.
        for p in (1.5, 2.5):
            pairs = [(R, closed_form_delta(p, 3, R)) for R in (5.0, 11.0)]
            got = extrapolate_eigenvalue(p, 3, pairs)
            assert got == pytest.approx(closed_form_delta(p, 3), rel=1e-12)

    def test_p2_exactness(self):
        pairs = [(R, closed_form_delta(2.0, 3, R)) for R in (5.0, 11.0, 21.0)]
        assert extrapolate_eigenvalue(2.0, 3, pairs) == pytest.approx(
            1.0, rel=1e-12)

    def test_needs_two_pairs(self):
        with pytest.raises(ValueError):
            extrapolate_eigenvalue(1.5, 3, [(11.0, 1.7)])

    def test_rejects_singular_p(self):
        # p out of (1, N) is rejected, and p within rounding of N hits the
        # logarithmic borderline a = 1 before the fit variable collapses.
        pairs = [(5.0, 1.0), (11.0, 1.0)]
        with pytest.raises(ValueError):
            extrapolate_eigenvalue(3.0, 3, pairs)
        near_n = float(np.nextafter(3.0, 0.0))
        with pytest.raises(ValueError, match="borderline"):
            extrapolate_eigenvalue(near_n, 3, pairs)
