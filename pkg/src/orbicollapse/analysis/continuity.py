"""Eigenvalue continuity under metric perturbation, and smooth approximation.

If two metrics satisfy e^{-δ} g₁ <= g₂ <= e^{δ} g₁ pointwise, then in
dimension 2 every eigenvalue ratio λ_j(g₁)/λ_j(g₂) lies in
[e^{-3δ}, e^{3δ}].  With constant tensors per triangle the discrete
Rayleigh quotients obey the same comparison, so the envelope is exact at
the matrix level.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..assembly import assemble
from ..csum import GluedComplex
from ..eigen import SpectrumResult, solve_smallest
from ..metric import (PIECEWISE, MetricField, mollify_across_interface,
                      rho_double_prime)

ZERO_FLOOR = 1e-8
DIMENSION = 2


@dataclass(frozen=True)
class ContinuityReport:
    """Eigenvalue ratios against the exp(±(n+1)δ) envelope."""

    delta: float
    ratios: np.ndarray  # NaN where λ_j(g₂) <= ZERO_FLOOR
    lower: float
    upper: float

    @property
    def passed(self) -> bool:
        r = self.ratios[np.isfinite(self.ratios)]
        return bool(np.all((r >= self.lower) & (r <= self.upper)))


def _spectrum(obj, k, seed):
    if isinstance(obj, SpectrumResult):
        return obj.eigenvalues[: k + 1]
    return solve_smallest(obj, k, seed=seed).eigenvalues


def continuity_check(system1, system2, delta: float, k: int, *, seed: int = 0,
                     rtol: float = 1e-9) -> ContinuityReport:
    """Check λ_j(g₁)/λ_j(g₂) ∈ [e^{-3δ}, e^{3δ}] for j <= k.

    ``system1``/``system2`` are assembled systems (or already computed
    spectra) over the same mesh.  ``rtol`` absorbs the solver tolerance.
    """
    lam1 = _spectrum(system1, k, seed)
    lam2 = _spectrum(system2, k, seed)
    ratios = np.full(len(lam2), np.nan)
    ok = lam2 > ZERO_FLOOR
    ratios[ok] = lam1[ok] / lam2[ok]
    c = (DIMENSION + 1) * float(delta)
    return ContinuityReport(float(delta), ratios, np.exp(-c) * (1 - rtol), np.exp(c) * (1 + rtol))


def random_spd_perturbation(f: MetricField, rho_max: float, rng) -> MetricField:
    """A per-triangle perturbation g' = g^{1/2} exp(S) g^{1/2} with ρ″(g, g') <= rho_max.

    S has random eigenvectors and eigenvalues uniform in [-rho_max, rho_max],
    so ρ″ equals the largest |eigenvalue| of S over triangles.
    """
    T = f.mesh.n_triangles
    ang = rng.uniform(0, np.pi, T)
    lam = rng.uniform(-rho_max, rho_max, (T, 2))
    c, s = np.cos(ang), np.sin(ang)
    q = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    expS = q @ (np.exp(lam)[..., None] * np.swapaxes(q, 1, 2))
    w, v = np.linalg.eigh(f.tensors)
    half = v @ (np.sqrt(w)[..., None] * np.swapaxes(v, 1, 2))
    return f.with_tensors(half @ expS @ half, PIECEWISE)


@dataclass(frozen=True)
class SmoothApproxReport:
    """Mollified spectra against the glued and limit spectra.

    Rows of ``mollified`` follow ``widths``.  ``margin[i, j]`` is the
    composite bound minus the observed deviation; nonnegative means the
    inequality holds.
    """

    epsilon: float
    widths: np.ndarray
    deltas: np.ndarray
    glued: np.ndarray
    reference: np.ndarray
    mollified: np.ndarray
    envelope_ok: np.ndarray
    margin: np.ndarray

    @property
    def deltas_monotone(self) -> bool:
        """δ_w non-increasing as the width decreases."""
        return bool(np.all(np.diff(self.deltas) <= 1e-12))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.envelope_ok) and np.all(self.margin >= 0)
                    and self.deltas_monotone)


def smooth_approx_check(cx: GluedComplex, widths, k: int, reference, *, seed: int = 0,
                        rtol: float = 1e-9) -> SmoothApproxReport:
    """Mollify g_ε across the gluing circle at each width and compare spectra.

    ``reference`` holds λ_j(O₁) for j <= k.  The composite inequality is
    |λ_j(moll) - λ_j(O₁)| <= |λ_j(g_ε) - λ_j(O₁)| + (e^{3δ_w} - 1) λ_j(g_ε).
    """
    widths = np.asarray(widths, dtype=float)
    if np.any(np.diff(widths) >= 0):
        raise ValueError("widths must be strictly decreasing")
    ref = np.asarray(reference, dtype=float)[: k + 1]
    mesh, g_eps = cx.glued_mesh, cx.glued_metric
    collar = cx.collar
    base = solve_smallest(assemble(mesh, g_eps), k, seed=seed).eigenvalues
    deltas, rows, env, margin = [], [], [], []
    for w in widths:
        moll = mollify_across_interface(g_eps, collar, float(w))
        d = rho_double_prime(g_eps, moll).rho_pp
        lam = solve_smallest(assemble(mesh, moll), k, seed=seed).eigenvalues
        rep = continuity_check(_as_result(lam), _as_result(base), d, k, rtol=rtol)
        slack = rtol * np.maximum(np.abs(base), 1.0)
        bound = np.abs(base - ref) + np.expm1((DIMENSION + 1) * d) * np.abs(base) + slack
        deltas.append(d)
        rows.append(lam)
        env.append(rep.passed)
        margin.append(bound - np.abs(lam - ref))
    return SmoothApproxReport(cx.epsilon, widths, np.array(deltas), base, ref,
                              np.array(rows), np.array(env), np.array(margin))


def _as_result(lam) -> SpectrumResult:
    lam = np.asarray(lam)
    return SpectrumResult(lam, np.empty((0, len(lam))), np.zeros(len(lam)), [], True, 0, 0.0)
