import dataclasses

import numpy as np
import pytest

from orbicollapse.analysis import (CutoffSpec, LemmaFailure, SweepError, boundary_trace, chi,
                                   chi_on_mesh, collapse_sweep, continuity_check, delta_bound,
                                   final_gap_ok, gaps_non_increasing, grad_chi_norm_sq_closed_form,
                                   harmonic_extension, random_spd_perturbation, resolve_cutoff,
                                   scaling_identity_check, smooth_approx_check, trace_decay,
                                   transplant, transplant_upper_bound, vertex_distances)
from orbicollapse.analysis.cutoff import sphere_volume
from orbicollapse.assembly import assemble, rayleigh
from orbicollapse.csum import ConnectedSumConfig, hole_positions
from orbicollapse.eigen import solve_smallest
from orbicollapse.mesh import MeshError
from orbicollapse.metric import euclidean, rho_double_prime, scale

from conftest import TAU


class TestCutoff:
    def test_knots(self):
        assert chi(0.01, 0.01) == 0.0
        assert chi(0.01, 0.1) == 1.0
        assert chi(0.01, 0.0) == 0.0
        assert chi(0.01, 5.0) == 1.0

    def test_ramp_value(self):
        assert chi(CutoffSpec(0.01), 0.05) == pytest.approx(-(2 / np.log(0.01)) * np.log(5), rel=1e-14)
        assert chi(0.01, 0.05) == pytest.approx(0.69897, abs=1e-5)

    def test_monotone(self):
        r = np.linspace(0, 1, 5001)
        assert np.all(np.diff(chi(0.03, r)) >= 0)

    def test_rejections(self):
        with pytest.raises(ValueError):
            chi(0.1, -1.0)
        with pytest.raises(ValueError):
            CutoffSpec(1.0)

    def test_closed_form(self):
        assert grad_chi_norm_sq_closed_form(np.exp(-4)) == pytest.approx(np.pi, rel=1e-15)
        assert grad_chi_norm_sq_closed_form(0.1, group_order=2) == 0.5 * grad_chi_norm_sq_closed_form(0.1)
        assert grad_chi_norm_sq_closed_form(0.05) == pytest.approx(4 * np.pi / abs(np.log(0.05)))
        vals = [grad_chi_norm_sq_closed_form(e) for e in (1e-1, 1e-3, 1e-6)]
        assert vals[0] > vals[1] > vals[2]
        with pytest.raises(ValueError):
            grad_chi_norm_sq_closed_form(1.0)

    def test_closed_form_higher_dimension(self):
        eps = 0.01
        expected = 4 * sphere_volume(3) / np.log(eps) ** 2 * (np.sqrt(eps) - eps)
        assert grad_chi_norm_sq_closed_form(eps, n=3) == pytest.approx(expected)
        assert sphere_volume(3) == pytest.approx(4 * np.pi)

    @pytest.mark.parametrize("eps", [0.05, 0.02])
    def test_discrete_energy_matches_closed_form(self, torus, gluing_points, eps):
        mesh, q = resolve_cutoff(torus[0], gluing_points[0], eps)
        c = chi_on_mesh(mesh, CutoffSpec(eps, q))
        s = assemble(mesh, euclidean(mesh))
        energy = c @ (s.K @ c)
        assert energy == pytest.approx(grad_chi_norm_sq_closed_form(eps), rel=0.05)

    def test_distances_exact_on_flat_chart(self, torus, gluing_points):
        mesh = torus[0]
        p = gluing_points[0]
        d = vertex_distances(mesh, p, 1.0)
        ok = np.isfinite(d)
        np.testing.assert_allclose(d[ok], np.linalg.norm(mesh.vertices[ok] - mesh.vertices[p], axis=1),
                                   atol=1e-12)


@pytest.fixture(scope="module")
def bounds(torus, gluing_points):
    out = {}
    for eps in (0.2, 0.05):
        mesh, q = resolve_cutoff(torus[0], gluing_points[0], eps)
        lam = solve_smallest(assemble(mesh, euclidean(mesh)), 6).eigenvalues[-1]
        out[eps] = delta_bound((mesh, euclidean(mesh)), CutoffSpec(eps, q), lam)
    return out


class TestDeltaBound:
    def test_invariant(self, bounds):
        for b in bounds.values():
            total = b.l2_defect + 2 * b.q_defect + b.q_defect_sq
            assert b.delta_value == pytest.approx(2 * (1 + b.lambda_k_reference) * total)
            assert b.q_defect_sq == pytest.approx(b.q_defect ** 2)
            assert b.delta_value > 0

    def test_decreases(self, bounds):
        assert bounds[0.05].delta_value < bounds[0.2].delta_value

    def test_linear_in_one_plus_lambda(self, torus, gluing_points):
        mesh, q = resolve_cutoff(torus[0], gluing_points[0], 0.05)
        a = delta_bound((mesh, euclidean(mesh)), CutoffSpec(0.05, q), 1.0)
        b = delta_bound((mesh, euclidean(mesh)), CutoffSpec(0.05, q), 3.0)
        assert b.delta_value == pytest.approx(2 * a.delta_value, rel=1e-14)

    def test_unresolved(self, coarse_torus, gluing_points):
        mesh = coarse_torus[0]
        p = int(np.argmin(np.linalg.norm(mesh.vertices - np.pi, axis=1)))
        with pytest.raises(MeshError):
            delta_bound(coarse_torus, CutoffSpec(1e-4, p), 1.0)


class TestTransplant:
    def test_upper_bound_inequality(self, canonical, torus_spectrum, torus, gluing_points):
        eps = 0.1
        cx = canonical(eps)
        rep = transplant_upper_bound(torus_spectrum, cx)
        mesh, q = resolve_cutoff(torus[0], gluing_points[0], eps)
        b = delta_bound((mesh, euclidean(mesh)), CutoffSpec(eps, q), torus_spectrum.eigenvalues[-1])
        assert np.all(rep.quotients <= (torus_spectrum.eigenvalues + b.delta_value) * 1.02)
        assert rep.min_singular_value > 1e-6

    def test_constant_mode_tends_to_zero(self, canonical, torus_spectrum):
        r = [transplant_upper_bound(torus_spectrum, canonical(e)).quotients[0] for e in (0.4, 0.1)]
        assert r[1] < r[0]
        # close to the capacity of the cutoff divided by the volume
        cx = canonical(0.1)
        col = transplant(torus_spectrum.eigenvectors[:, :1], cx)[:, 0]
        assert rayleigh(cx.system(), col) == pytest.approx(r[1], rel=1e-12)
        assert r[1] == pytest.approx(grad_chi_norm_sq_closed_form(0.1) / TAU ** 2, rel=0.1)

    def test_transplant_vanishes_on_circle(self, canonical, torus_spectrum):
        cx = canonical(0.2)
        cols = transplant(torus_spectrum.eigenvectors, cx)
        assert np.max(np.abs(cols[cx.dof_map1[cx.loop1]])) < 1e-14
        unpaired = np.setdiff1d(np.arange(cx.n_dofs), cx.dof_map1)
        assert np.max(np.abs(cols[unpaired])) == 0.0

    def test_gram_tends_to_identity(self, canonical, torus_spectrum):
        dev = [transplant_upper_bound(torus_spectrum, canonical(e)).gram_deviation for e in (0.4, 0.2, 0.1)]
        assert dev[0] > dev[1] > dev[2]

    def test_dependence_reported(self, canonical, torus_spectrum):
        spec = dataclasses.replace(torus_spectrum,
                                   eigenvectors=np.repeat(torus_spectrum.eigenvectors[:, 1:2], 2, axis=1))
        with pytest.raises(LemmaFailure):
            transplant_upper_bound(spec, canonical(0.2))


class TestExtension:
    def test_constant(self, canonical):
        cx = canonical(0.2)
        rep = harmonic_extension(np.ones(cx.mesh1.n_vertices), cx)
        np.testing.assert_allclose(rep.ball_values, 1.0, atol=1e-13)
        assert rep.ball_energy < 1e-12

    def test_linear(self, canonical):
        cx = canonical(0.2)
        pos = hole_positions(cx, 10.0)
        x = np.nan_to_num(pos[:, 0] + 2 * pos[:, 1])
        rep = harmonic_extension(x, cx)
        v = rep.ball.vertices
        np.testing.assert_allclose(rep.ball_values, v[:, 0] + 2 * v[:, 1], atol=1e-12)

    def test_dirichlet_principle(self, canonical):
        cx = canonical(0.2)
        rng = np.random.default_rng(0)
        f1 = rng.standard_normal(cx.mesh1.n_vertices)
        rep = harmonic_extension(f1, cx)
        s = assemble(rep.ball, euclidean(rep.ball))
        interior = np.setdiff1d(np.arange(rep.ball.n_vertices), rep.ball.boundary_loops[0])
        for _ in range(10):
            other = rep.ball_values.copy()
            other[interior] += rng.standard_normal(len(interior))
            assert other @ (s.K @ other) >= rep.ball_energy
        assert rep.constant >= 1.0


@pytest.fixture(scope="module")
def entries(canonical):
    return [(canonical(e), solve_smallest(canonical(e).system(), 6)) for e in (0.4, 0.2, 0.1, 0.05)]


class TestTraceDecay:
    def test_constant_mode(self, entries):
        for cx, spec in entries:
            c = np.abs(spec.eigenvectors[0, 0])
            k = cx.config.k_boundary
            perimeter = 2 * k * np.sin(np.pi / k) * cx.epsilon
            value = np.sqrt(cx.epsilon) * boundary_trace(cx, spec.eigenvectors[:, 0])
            assert value == pytest.approx(np.sqrt(cx.epsilon * perimeter) * c, rel=1e-10)

    def test_decay(self, entries):
        rep = trace_decay(entries, 5)
        assert np.all(rep.decays(0.10))

    def test_zero_near_boundary(self, canonical):
        cx = canonical(0.2)
        u = np.zeros(cx.n_dofs)
        assert boundary_trace(cx, u) == 0.0


class TestScaling:
    @pytest.mark.parametrize("eps", [1.0, 0.3, 0.05])
    def test_identities(self, pillowcase, eps):
        rep = scaling_identity_check(*pillowcase, eps)
        assert rep.passed(1e-12)
        assert rep.n_samples == 100

    def test_constant_function(self, pillowcase):
        mesh, g = pillowcase
        one = np.ones((mesh.n_vertices, 1))
        rep = scaling_identity_check(mesh, g, 0.3, samples=one)
        assert rep.mass_defect < 1e-13


class TestContinuity:
    def test_identical(self, coarse_torus):
        s = assemble(*coarse_torus)
        rep = continuity_check(s, s, 0.0, 6)
        np.testing.assert_allclose(rep.ratios[1:], 1.0, rtol=1e-9)
        assert np.isnan(rep.ratios[0])
        assert rep.passed

    @pytest.mark.parametrize("c", [0.5, 2.0])
    def test_scaling(self, coarse_torus, c):
        mesh, g = coarse_torus
        rep = continuity_check(assemble(mesh, g), assemble(mesh, scale(g, c)), abs(np.log(c)), 6)
        np.testing.assert_allclose(rep.ratios[1:], c, rtol=1e-7)
        assert rep.passed

    def test_perturbation_distance(self, coarse_torus):
        rng = np.random.default_rng(5)
        g = random_spd_perturbation(coarse_torus[1], 0.1, rng)
        assert rho_double_prime(coarse_torus[1], g).rho_pp <= 0.1 + 1e-12
        g.validate()

    def test_random_trials(self, coarse_torus):
        mesh, g = coarse_torus
        base = solve_smallest(assemble(mesh, g), 10)
        rng = np.random.default_rng(11)
        for _ in range(5):
            g2 = random_spd_perturbation(g, 0.1, rng)
            d = rho_double_prime(g, g2).rho_pp
            assert continuity_check(base, assemble(mesh, g2), d, 10).passed

    def test_detects_violation(self, coarse_torus):
        mesh, g = coarse_torus
        rep = continuity_check(assemble(mesh, g), assemble(mesh, scale(g, 2.0)), 0.01, 4)
        assert not rep.passed


class TestSmoothApprox:
    def test_envelope(self, canonical, torus_spectrum):
        rep = smooth_approx_check(canonical(0.1, 64), [0.08, 0.04, 0.02], 6, torus_spectrum.eigenvalues)
        assert rep.passed
        assert rep.deltas_monotone
        assert np.all(rep.envelope_ok)

    def test_width_zero(self, canonical, torus_spectrum):
        rep = smooth_approx_check(canonical(0.1), [0.0], 4, torus_spectrum.eigenvalues)
        assert rep.deltas[0] == 0.0
        np.testing.assert_allclose(rep.mollified[0], rep.glued, atol=1e-9)

    def test_widths_must_decrease(self, canonical, torus_spectrum):
        with pytest.raises(ValueError):
            smooth_approx_check(canonical(0.1), [0.02, 0.04], 4, torus_spectrum.eigenvalues)


class TestSweep:
    def test_single(self, torus, pillowcase, gluing_points, torus_spectrum):
        recs = collapse_sweep(torus, pillowcase, ConnectedSumConfig(0.4, *gluing_points), [0.4], 4,
                              reference=torus_spectrum.eigenvalues[:5], oracle=[0, 1, 1, 1, 1])
        assert len(recs) == 1
        r = recs[0]
        assert r.converged and np.all(r.gaps >= 0)
        np.testing.assert_allclose(r.gaps, np.abs(r.eigenvalues - r.reference))

    def test_rejects_increasing(self, torus, pillowcase, gluing_points):
        with pytest.raises(ValueError):
            collapse_sweep(torus, pillowcase, ConnectedSumConfig(0.4, *gluing_points), [0.1, 0.2], 4)

    def test_threads_do_not_change_results(self, torus, pillowcase, gluing_points, torus_spectrum):
        args = (torus, pillowcase, ConnectedSumConfig(0.4, *gluing_points), [0.4, 0.2], 4)
        kw = dict(reference=torus_spectrum.eigenvalues[:5], oracle=[0, 1, 1, 1, 1])
        a = collapse_sweep(*args, threads=1, **kw)
        b = collapse_sweep(*args, threads=2, **kw)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.eigenvalues, y.eigenvalues)

    def test_failure_keeps_partial_records(self, torus, pillowcase, gluing_points, torus_spectrum):
        # gluing at a cone point fails for every entry
        bad = ConnectedSumConfig(0.4, gluing_points[0], pillowcase[0].cone_points[0].vertex)
        with pytest.raises(SweepError) as info:
            collapse_sweep(torus, pillowcase, bad, [0.4, 0.2], 4, reference=torus_spectrum.eigenvalues[:5],
                           oracle=[0, 1, 1, 1, 1])
        assert info.value.records == []

    def test_trend_helpers(self, torus, pillowcase, gluing_points, torus_spectrum):
        recs = collapse_sweep(torus, pillowcase, ConnectedSumConfig(0.4, *gluing_points), [0.4, 0.1], 6,
                              reference=torus_spectrum.eigenvalues, oracle=[0, 1, 1, 1, 1, 2, 2])
        assert np.all(gaps_non_increasing(recs))
        assert np.all(final_gap_ok(recs))
