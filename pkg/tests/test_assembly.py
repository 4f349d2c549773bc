import numpy as np
import pytest
import scipy.sparse as sp

from orbicollapse.assembly import (AssemblyError, assemble, boundary_mass, element_matrices,
                                   export_coo, q_norm, rayleigh)
from orbicollapse.mesh import OrbiMesh, build_spindle, excise_ball
from orbicollapse.metric import MetricField, euclidean, round_sphere, scale

from conftest import TAU, nearest_vertex


@pytest.fixture(scope="module")
def pillow_system(pillowcase):
    return assemble(*pillowcase)


def test_stiffness_symmetric_exactly(pillow_system):
    K = pillow_system.K
    assert (K - K.T).count_nonzero() == 0


def test_constants_in_kernel(pillow_system):
    assert np.max(np.abs(pillow_system.K @ np.ones(pillow_system.n_dofs))) < 1e-10


def test_mass_total_is_area(pillowcase, pillow_system):
    one = np.ones(pillow_system.n_dofs)
    assert one @ (pillow_system.M @ one) == pytest.approx(pillowcase[1].area(), rel=1e-13)


def test_mass_positive_definite(coarse_torus):
    s = assemble(*coarse_torus)
    assert np.linalg.eigvalsh(s.M.toarray()).min() > 0


def test_linear_function_energy_on_flat_patch(coarse_torus):
    mesh, g = coarse_torus
    ex = excise_ball(mesh, nearest_vertex(mesh, (np.pi, np.pi)), 0.5, 16)
    s = assemble(ex, euclidean(ex))
    x = ex.vertices[:, 0]
    # x is affine away from the seam; compare with exact gradient energy
    # over the triangles that do not touch the seam
    k, _ = element_matrices(ex, euclidean(ex))
    local = np.einsum("ti,tij,tj->t", x[ex.triangles], k, x[ex.triangles])
    span = np.ptp(ex.vertices[ex.triangles, 0], axis=1)
    area = ex.signed_areas
    ok = span < 1.0
    np.testing.assert_allclose(local[ok], area[ok], rtol=1e-10)
    assert s.closed is False


def test_chart_weight_lift_equivalence(coarse_torus):
    """A chart lift with weight 1/|Γ| reproduces the quotient integrals."""
    mesh, g = coarse_torus
    lifted = OrbiMesh(mesh.vertices, mesh.triangles, mesh.corners, chart_weight=np.full(mesh.n_triangles, 0.5))
    a = assemble(mesh, g)
    b = assemble(lifted, MetricField(lifted, g.tensors))
    assert abs(b.K - 0.5 * a.K).max() < 1e-15
    assert abs(b.M - 0.5 * a.M).max() < 1e-15


def test_scaling_at_matrix_level(coarse_torus):
    mesh, g = coarse_torus
    a = assemble(mesh, g)
    b = assemble(mesh, scale(g, 0.09))
    np.testing.assert_allclose(b.M.toarray(), 0.09 * a.M.toarray(), rtol=1e-13, atol=1e-18)
    np.testing.assert_allclose(b.K.toarray(), a.K.toarray(), rtol=1e-12, atol=1e-14)


def test_degenerate_metric_rejected(coarse_torus):
    mesh = coarse_torus[0]
    g = np.broadcast_to(np.eye(2), (mesh.n_triangles, 2, 2)).copy()
    g[3] = [[1.0, 0.0], [0.0, 0.0]]
    with pytest.raises(AssemblyError):
        assemble(mesh, MetricField(mesh, g))


def test_metric_required(coarse_torus):
    with pytest.raises(AssemblyError):
        assemble(coarse_torus[0])


def test_boundary_mass_total_is_perimeter(coarse_torus):
    mesh = coarse_torus[0]
    ex = excise_ball(mesh, nearest_vertex(mesh, (np.pi, np.pi)), 0.4, 32)
    B = boundary_mass(ex, 0, euclidean(ex))
    one = np.ones(ex.n_vertices)
    assert one @ (B @ one) == pytest.approx(64 * np.sin(np.pi / 32) * 0.4, rel=1e-12)
    assert (B - B.T).count_nonzero() == 0


def test_boundary_mass_rejects_interior_cycle(coarse_torus):
    mesh = coarse_torus[0]
    with pytest.raises(Exception):
        boundary_mass(mesh, [0, 1, 2], euclidean(mesh))


def test_rayleigh_and_q_norm(coarse_torus):
    s = assemble(*coarse_torus)
    one = np.ones(s.n_dofs)
    assert rayleigh(s, one) == pytest.approx(0.0, abs=1e-12)
    assert q_norm(s, one) == pytest.approx(TAU, rel=1e-12)
    with pytest.raises(AssemblyError):
        rayleigh(s, np.zeros(s.n_dofs))


def test_export_coo_sorted(tmp_path, coarse_torus):
    s = assemble(*coarse_torus)
    path = tmp_path / "K.txt"
    export_coo(s.K, path)
    rows = np.loadtxt(path)
    keys = rows[:, 0] * s.n_dofs + rows[:, 1]
    assert np.all(np.diff(keys) > 0)
    back = sp.coo_matrix((rows[:, 2], (rows[:, 0].astype(int), rows[:, 1].astype(int))),
                         shape=s.K.shape)
    assert abs(back - s.K).max() == 0


def test_sphere_mass_is_round_area():
    mesh = build_spindle(1, 0.1)
    s = assemble(mesh, round_sphere(mesh))
    one = np.ones(s.n_dofs)
    assert one @ (s.M @ one) == pytest.approx(4 * np.pi, rel=5e-3)
