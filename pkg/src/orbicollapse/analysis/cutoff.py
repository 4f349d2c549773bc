"""The logarithmic cutoff χ_ε and its Dirichlet energy.

χ_ε vanishes on the ball of radius ε, rises like a logarithm between ε
and √ε and equals 1 beyond.  Its Dirichlet energy in dimension 2 is
4π/(m|ln ε|), which tends to 0 while χ_ε tends to 1: the capacity
argument behind transplanting eigenfunctions away from a point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from ..mesh.core import MeshError, OrbiMesh, develop


@dataclass(frozen=True)
class CutoffSpec:
    """Cutoff radius ``epsilon`` around the vertex ``center`` (p₁)."""

    epsilon: float
    center: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def outer(self) -> float:
        return float(np.sqrt(self.epsilon))


def chi(spec: CutoffSpec | float, r):
    """χ_ε(r): 0 on [0, ε], -(2/ln ε) ln(r/ε) on [ε, √ε], 1 beyond."""
    eps = spec.epsilon if isinstance(spec, CutoffSpec) else float(spec)
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("distances must be nonnegative")
    with np.errstate(divide="ignore"):
        ramp = -2.0 / np.log(eps) * np.log(np.maximum(r, eps) / eps)
    out = np.clip(ramp, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def sphere_volume(n: int) -> float:
    """Volume of the unit sphere S^{n-1} in R^n."""
    return float(2 * np.pi ** (n / 2) / gamma(n / 2))


def grad_chi_norm_sq_closed_form(epsilon: float, n: int = 2, group_order: int = 1) -> float:
    """‖∇χ_ε‖² on a ball quotient R^n/G, |G| = ``group_order``.

    Equals 4 Vol(S^{n-1}) / (|G| (ln ε)²) ∫_ε^{√ε} r^{n-3} dr, which is
    4π/(m|ln ε|) for n = 2.
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if n < 2 or group_order < 1:
        raise ValueError("need n >= 2 and group_order >= 1")
    log_eps = np.log(epsilon)
    if n == 2:
        integral = -0.5 * log_eps
    else:
        integral = (epsilon ** ((n - 2) / 2) - epsilon ** (n - 2)) / (n - 2)
    return float(4 * sphere_volume(n) / (group_order * log_eps ** 2) * integral)


def vertex_distances(mesh: OrbiMesh, center: int, reach: float) -> np.ndarray:
    """Flat-chart distance from ``center`` to every vertex within ``reach``.

    Distances come from unfolding the neighbourhood isometrically; vertices
    farther than ``reach`` (or not reached) get ``inf``.
    """
    dev = develop(mesh, center, radius=reach)
    d = dev.distance
    return np.where(np.isfinite(d) & (d <= reach), d, np.inf)


def chi_on_mesh(mesh: OrbiMesh, spec: CutoffSpec, distances=None) -> np.ndarray:
    """χ_ε sampled at the vertices (its P1 interpolant)."""
    if distances is None:
        distances = vertex_distances(mesh, spec.center, 1.5 * spec.outer)
    return chi(spec, np.asarray(distances, dtype=float))


def check_resolved(distances, spec: CutoffSpec, min_vertices: int = 6) -> None:
    """Raise unless enough vertices fall strictly inside the ramp (ε, √ε)."""
    d = np.asarray(distances, dtype=float)
    inside = int(np.count_nonzero((d > spec.epsilon) & (d < spec.outer)))
    if inside < min_vertices:
        raise MeshError(
            f"epsilon={spec.epsilon:g} is unresolved: {inside} vertices in the ramp "
            f"(need {min_vertices}); refine or grade the mesh at p1"
        )


def resolve_cutoff(mesh: OrbiMesh, center: int, epsilon: float, inner_nodes: int = 16):
    """Grade ``mesh`` at ``center`` so that a vertex ring sits at radius ε.

    Returns ``(graded_mesh, new_center)``.  With a ring on the inner knot
    χ_ε is exactly zero on the fan inside it, and the logarithmic ramp is
    sampled on geometrically spaced rings.  When ε is not below the
    shortest incident edge the mesh already resolves the ramp and is
    returned unchanged.
    """
    from ..mesh.surgery import grade_toward, new_index

    shortest = float(mesh.incident_edge_lengths(center).min())
    if epsilon >= shortest:
        return mesh, center
    graded = grade_toward(mesh, center, epsilon / shortest, inner_nodes=inner_nodes)
    return graded, new_index(mesh, graded, center)
