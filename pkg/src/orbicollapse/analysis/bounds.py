"""Upper bound by transplanting eigenfunctions of the first factor.

Multiplying an eigenfunction f of O₁ by χ_ε kills it on the excised ball,
so (χ_ε f, 0) is admissible on the connected sum.  Its Rayleigh quotient
exceeds λ(O₁) by at most δ(ε), built from three norms of χ_ε.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..assembly import assemble, rayleigh
from ..csum import GluedComplex, hole_distances
from .cutoff import CutoffSpec, check_resolved, chi, chi_on_mesh, vertex_distances


class LemmaFailure(RuntimeError):
    """The transplanted functions are numerically dependent."""


@dataclass(frozen=True)
class BoundReport:
    """δ(ε) = 2(1 + λ_k)(a + 2b + b²) with its ingredients.

    a = ‖1 - χ_ε²‖₀ and b = ‖χ_ε - 1‖_q, computed with the O₁ matrices.
    """

    epsilon: float
    lambda_k_reference: float
    l2_defect: float
    q_defect: float
    q_defect_sq: float
    delta_value: float


def delta_bound(o1, spec: CutoffSpec, lambda_k_ref: float, *, distances=None) -> BoundReport:
    """δ(ε) on the mesh-metric pair ``o1 = (mesh, metric)``.

    Raises
    ------
    MeshError
        If the mesh does not resolve the ramp of χ_ε (see
        :func:`~orbicollapse.analysis.cutoff.resolve_cutoff`).
    """
    mesh, metric = o1
    if lambda_k_ref < 0:
        raise ValueError("lambda_k_ref must be nonnegative")
    if distances is None:
        distances = vertex_distances(mesh, spec.center, 1.5 * spec.outer)
    check_resolved(distances, spec)
    system = assemble(mesh, metric)
    c = chi_on_mesh(mesh, spec, distances)
    w = 1.0 - c * c
    u = c - 1.0
    a = float(np.sqrt(w @ (system.M @ w)))
    b_sq = float(u @ (system.K @ u) + u @ (system.M @ u))
    b = float(np.sqrt(b_sq))
    delta = 2.0 * (1.0 + lambda_k_ref) * (a + 2.0 * b + b_sq)
    return BoundReport(spec.epsilon, float(lambda_k_ref), a, b, b_sq, delta)


@dataclass(frozen=True)
class TransplantReport:
    """Rayleigh quotients of (χ_ε f_j, 0) and their M-Gram matrix."""

    epsilon: float
    quotients: np.ndarray
    gram: np.ndarray
    min_singular_value: float

    @property
    def gram_deviation(self) -> float:
        """max |G - I| entrywise."""
        return float(np.max(np.abs(self.gram - np.eye(len(self.gram)))))


def transplant(o1_vectors, cx: GluedComplex) -> np.ndarray:
    """Columns (χ_ε f_j, 0) as glued DOF vectors.

    ``o1_vectors`` live on the unexcised O₁ mesh the complex was built
    from; the excision transfer moves them onto ``mesh1``.
    """
    if cx.transfer1 is None:
        raise ValueError("the complex carries no transfer from the O1 mesh")
    f = cx.transfer1 @ np.asarray(o1_vectors, dtype=float)
    spec = CutoffSpec(cx.epsilon)
    c = chi(spec, hole_distances(cx, 1.5 * spec.outer))
    f = f * c[:, None]
    return np.column_stack([cx.extend1(f[:, j]) for j in range(f.shape[1])])


def transplant_upper_bound(o1_spectrum, cx: GluedComplex, gram_floor: float = 1e-6):
    """Rayleigh quotients on the connected sum of transplanted eigenvectors.

    Raises
    ------
    LemmaFailure
        If the smallest singular value of the transplanted M-Gram matrix is
        at most ``gram_floor``.
    """
    cols = transplant(o1_spectrum.eigenvectors, cx)
    system = cx.system()
    quotients = np.array([rayleigh(system, cols[:, j]) for j in range(cols.shape[1])])
    gram = cols.T @ (system.M @ cols)
    smin = float(np.linalg.svd(gram, compute_uv=False).min())
    if not smin > gram_floor:
        raise LemmaFailure(
            f"transplanted functions are dependent at epsilon={cx.epsilon:g} "
            f"(smallest singular value {smin:.3e})"
        )
    return TransplantReport(cx.epsilon, quotients, gram, smin)
