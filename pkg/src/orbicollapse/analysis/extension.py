"""Diagnostics of the lower-bound side: scaling, extension, trace decay.

The lower bound needs three facts about eigenfunctions of the connected
sum: the second factor's L² mass scales like ε² while its energy is
scale invariant, the first-factor part extends harmonically across the
ball with controlled H¹ norm, and its trace on the gluing circle decays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from ..assembly import AssemblyError, assemble, boundary_mass, q_norm
from ..csum import GluedComplex, hole_positions
from ..mesh.builders import build_disc
from ..mesh.core import OrbiMesh
from ..metric import MetricField, euclidean, scale


@dataclass(frozen=True)
class ScalingReport:
    """Worst relative defects of uᵀM_εu = ε²uᵀMu and uᵀK_εu = uᵀKu."""

    epsilon: float
    n_samples: int
    mass_defect: float
    stiffness_defect: float

    def passed(self, tol: float = 1e-12) -> bool:
        return self.mass_defect <= tol and self.stiffness_defect <= tol


def scaling_identity_check(mesh: OrbiMesh, metric: MetricField, epsilon: float,
                           samples=100, seed: int = 0) -> ScalingReport:
    """Compare the assemblies of g and ε²g on random vectors.

    ``samples`` is a count of standard normal vectors or an explicit
    (n, s) array of sample functions.
    """
    base = assemble(mesh, metric)
    scaled = assemble(mesh, scale(metric, epsilon ** 2))
    if np.ndim(samples) == 0:
        u = np.random.default_rng(seed).standard_normal((mesh.n_vertices, int(samples)))
    else:
        u = np.asarray(samples, dtype=float).reshape(mesh.n_vertices, -1)

    def quad(A):
        return np.einsum("ij,ij->j", u, A @ u)

    m0, m1 = quad(base.M), quad(scaled.M)
    k0, k1 = quad(base.K), quad(scaled.K)
    mass = np.abs(m1 - epsilon ** 2 * m0) / np.abs(epsilon ** 2 * m0)
    nz = np.abs(k0) > 0
    stiff = np.abs(k1 - k0)[nz] / np.abs(k0[nz])
    return ScalingReport(float(epsilon), u.shape[1], float(mass.max()),
                         float(stiff.max()) if stiff.size else 0.0)


@dataclass(frozen=True)
class ExtensionReport:
    """Harmonic extension of a first-factor function across the ball.

    The extended function is the pair (``outer`` on ``mesh1``,
    ``ball_values`` on ``ball``); both agree on the glued circle.
    ``constant`` is the empirical ratio of H¹ norms extended/input.
    """

    ball: OrbiMesh
    ball_values: np.ndarray
    outer: np.ndarray
    ball_energy: float
    input_h1: float
    extension_h1: float

    @property
    def constant(self) -> float:
        return self.extension_h1 / self.input_h1 if self.input_h1 > 0 else 1.0


def circle_match(cx: GluedComplex, ball: OrbiMesh) -> np.ndarray:
    """Ball boundary node matching each ``loop1`` node, by angle."""
    pos = hole_positions(cx, 1.5 * cx.epsilon)[cx.loop1]
    ang = np.mod(np.arctan2(pos[:, 1], pos[:, 0]), 2 * np.pi)
    bloop = ball.boundary_loops[0]
    bv = ball.vertices[bloop]
    bang = np.mod(np.arctan2(bv[:, 1], bv[:, 0]), 2 * np.pi)
    diff = np.abs(np.angle(np.exp(1j * (ang[:, None] - bang[None, :]))))
    j = np.argmin(diff, axis=1)
    if np.max(diff[np.arange(len(j)), j]) > 1e-6 or len(set(j.tolist())) != len(j):
        raise AssemblyError("ball boundary nodes do not match the excision circle")
    return bloop[j]


def harmonic_extension(f1, cx: GluedComplex, ball: OrbiMesh | None = None) -> ExtensionReport:
    """Extend ``f1`` (values on ``cx.mesh1``) harmonically into the ball.

    The ball defaults to a flat disc of radius ε with the complex's circle
    nodes.  Its boundary values are those of ``f1`` on the circle; the
    interior solves the discrete Dirichlet problem.

    Raises
    ------
    AssemblyError
        If the ball stiffness is singular on the interior nodes.
    """
    f1 = np.asarray(f1, dtype=float)
    if ball is None:
        ball = build_disc(cx.epsilon, cx.config.k_boundary)
    bnodes = circle_match(cx, ball)
    sb = assemble(ball, euclidean(ball))
    values = np.zeros(ball.n_vertices)
    values[bnodes] = f1[cx.loop1]
    interior = np.setdiff1d(np.arange(ball.n_vertices), bnodes)
    K = sb.K.tocsr()
    kii = K[interior][:, interior].tocsc()
    rhs = -(K[interior][:, bnodes] @ values[bnodes])
    try:
        sol = spla.spsolve(kii, rhs)
    except RuntimeError as err:
        raise AssemblyError(f"ball stiffness is singular: {err}") from None
    if not np.all(np.isfinite(sol)):
        raise AssemblyError("ball stiffness is singular")
    values[interior] = sol
    s1 = assemble(cx.mesh1, cx.metric1)
    h_in = q_norm(s1, f1)
    h_ball = q_norm(sb, values)
    energy = float(values @ (sb.K @ values))
    return ExtensionReport(ball, values, f1, energy, h_in, float(np.hypot(h_in, h_ball)))


@dataclass(frozen=True)
class TraceDecayReport:
    """√ε·‖f¹_{j,ε}‖ on the gluing circle, rows per ε, columns per j."""

    epsilons: np.ndarray
    values: np.ndarray

    def decays(self, slack: float = 0.10) -> np.ndarray:
        """Per j: value at the smallest ε <= (1 + slack) x value at the largest."""
        first = self.values[np.argmax(self.epsilons)]
        last = self.values[np.argmin(self.epsilons)]
        return last <= (1.0 + slack) * first


def boundary_trace(cx: GluedComplex, u) -> float:
    """‖f¹|∂O₁(ε)‖ in L² of the circle for a glued vector ``u``."""
    f1 = cx.restrict1(u)
    B = boundary_mass(cx.mesh1, cx.loop1, cx.metric1)
    return float(np.sqrt(max(f1 @ (B @ f1), 0.0)))


def trace_decay(entries, count: int | None = None) -> TraceDecayReport:
    """Trace values for a sweep given as (complex, spectrum) pairs."""
    eps, rows = [], []
    for cx, spec in entries:
        u = spec.eigenvectors
        n = u.shape[1] if count is None else count
        rows.append([np.sqrt(cx.epsilon) * boundary_trace(cx, u[:, j]) for j in range(n)])
        eps.append(cx.epsilon)
    return TraceDecayReport(np.array(eps), np.array(rows))
