"""P1 finite-element stiffness and mass matrices.

With a constant metric tensor per triangle, every element integral has a
closed form, so the scaling identities of conformal changes hold at the
matrix level up to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh.core import MeshError, OrbiMesh
from .metric import MetricField

_GRAD = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


class AssemblyError(ValueError):
    """Raised when an element is degenerate or inputs do not match."""


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """Stiffness ``K`` (the Dirichlet form) and mass ``M`` over the DOFs."""

    K: sp.csr_matrix
    M: sp.csr_matrix
    n_dofs: int
    source: str
    closed: bool = True

    def shifted(self, sigma: float) -> "AssembledSystem":
        """The pencil (K + σM, M), whose eigenvalues are shifted by σ."""
        return AssembledSystem((self.K + sigma * self.M).tocsr(), self.M, self.n_dofs,
                               f"{self.source}+{sigma:g}M", self.closed)


def element_matrices(mesh: OrbiMesh, metric: MetricField):
    """Local (T, 3, 3) stiffness and mass matrices."""
    if metric.mesh is not mesh and metric.mesh.n_triangles != mesh.n_triangles:
        raise AssemblyError("metric does not belong to this mesh")
    e = mesh.edge_vectors
    gref = np.swapaxes(e, 1, 2) @ metric.tensors @ e
    det = gref[:, 0, 0] * gref[:, 1, 1] - gref[:, 0, 1] * gref[:, 1, 0]
    if np.any(~(det > 0)):
        bad = int(np.flatnonzero(~(det > 0))[0])
        raise AssemblyError(f"triangle {bad} is degenerate under the metric (det <= 0)")
    area = 0.5 * np.sqrt(det) * mesh.chart_weight
    inv = np.empty_like(gref)
    inv[:, 0, 0] = gref[:, 1, 1] / det
    inv[:, 1, 1] = gref[:, 0, 0] / det
    inv[:, 0, 1] = inv[:, 1, 0] = -0.5 * (gref[:, 0, 1] + gref[:, 1, 0]) / det
    k = area[:, None, None] * (_GRAD @ inv @ _GRAD.T)
    k = 0.5 * (k + np.swapaxes(k, 1, 2))
    m = area[:, None, None] * _MASS
    return k, m


def _scatter(tri, local, n):
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble(meshlike, metric: MetricField | None = None) -> AssembledSystem:
    """Assemble K and M on a mesh, or on a glued complex.

    Parameters
    ----------
    meshlike : OrbiMesh or GluedComplex
    metric : MetricField
        Required for a mesh; a complex carries its own metric.
    """
    if hasattr(meshlike, "dof_map1"):
        return assemble_glued(meshlike)
    if metric is None:
        raise AssemblyError("assembling a mesh needs a metric")
    mesh = meshlike
    k, m = element_matrices(mesh, metric)
    n = mesh.n_vertices
    K = _scatter(mesh.triangles, k, n)
    M = _scatter(mesh.triangles, m, n)
    return AssembledSystem(K, M, n, f"mesh:{mesh.name}", mesh.is_closed)


def dof_projection(dof_map, n_dofs) -> sp.csr_matrix:
    """0/1 matrix P with (P @ u_glued) = u restricted to one factor."""
    dof_map = np.asarray(dof_map)
    return sp.csr_matrix(
        (np.ones(len(dof_map)), (np.arange(len(dof_map)), dof_map)),
        shape=(len(dof_map), n_dofs),
    )


def assemble_glued(cx) -> AssembledSystem:
    """K and M of the glued form: factor matrices summed through the DOF map.

    Continuity across the interface is built into the shared DOFs; the
    form has no interface term.
    """
    s1 = assemble(cx.mesh1, cx.metric1)
    s2 = assemble(cx.mesh2, cx.metric2)
    p1 = dof_projection(cx.dof_map1, cx.n_dofs)
    p2 = dof_projection(cx.dof_map2, cx.n_dofs)
    K = (p1.T @ s1.K @ p1 + p2.T @ s2.K @ p2).tocsr()
    M = (p1.T @ s1.M @ p1 + p2.T @ s2.M @ p2).tocsr()
    return AssembledSystem(K, M, cx.n_dofs, f"glued:eps={cx.config.epsilon:g}", True)


def boundary_mass(mesh: OrbiMesh, loop, metric: MetricField) -> sp.csr_matrix:
    """Consistent P1 mass matrix of a boundary loop (edge quadrature).

    ``loop`` is an index into ``mesh.boundary_loops`` or a vertex cycle
    whose consecutive pairs are boundary edges.
    """
    if np.ndim(loop) == 0:
        loop = mesh.boundary_loops[int(loop)]
    loop = np.asarray(loop, dtype=np.int64)
    he = mesh.half_edges
    bnd = mesh.boundary_half_edges()
    index = {(int(a), int(b)): int(h) for h, (a, b) in zip(bnd, he[bnd])}
    lengths = metric.edge_lengths().ravel() * np.repeat(mesh.chart_weight, 3)
    rows, cols, vals = [], [], []
    for a, b in zip(loop, np.roll(loop, -1)):
        h = index.get((int(a), int(b)))
        if h is None:
            raise MeshError(f"edge ({a}, {b}) is not a boundary edge of the mesh")
        ell = lengths[h]
        rows += [a, a, b, b]
        cols += [a, b, a, b]
        vals += [ell / 3, ell / 6, ell / 6, ell / 3]
    n = mesh.n_vertices
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def q_norm(system: AssembledSystem, u) -> float:
    """sqrt(uᵀKu + uᵀMu), the norm of the form domain."""
    u = np.asarray(u, dtype=float)
    return float(np.sqrt(u @ (system.K @ u) + u @ (system.M @ u)))


def rayleigh(system: AssembledSystem, u) -> float:
    """uᵀKu / uᵀMu."""
    u = np.asarray(u, dtype=float)
    den = float(u @ (system.M @ u))
    if not den > 0:
        raise AssemblyError("Rayleigh quotient of a function with zero L² norm")
    return float(u @ (system.K @ u)) / den


def export_coo(matrix, path) -> None:
    """Write ``row col value`` lines sorted row-major."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        for i in order:
            fh.write(f"{coo.row[i]} {coo.col[i]} {coo.data[i]:.17g}\n")
