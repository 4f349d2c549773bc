"""Smallest eigenpairs of the pencil K u = λ M u.

Block shift-invert subspace iteration: one sparse LU factorization of
``K + σM`` with a small negative shift, repeated block solves, and a
Rayleigh-Ritz projection each step.  Pairs are certified by their
residuals ``‖Ku - λMu‖ <= tol ‖Mu‖``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import AssembledSystem


class EigenError(RuntimeError):
    """Raised when the pencil cannot be factorized."""


@dataclass(frozen=True)
class SpectrumResult:
    """Ascending eigenvalues with M-orthonormal eigenvectors.

    Attributes
    ----------
    eigenvalues : ndarray (k+1,)
    eigenvectors : ndarray (n, k+1)
    residuals : ndarray (k+1,)
        ``‖Ku - λMu‖₂ / ‖Mu‖₂`` per pair.
    clusters : list of list of int
    converged : bool
        False when the iteration cap was reached first (partial result).
    iterations : int
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    residuals: np.ndarray
    clusters: list
    converged: bool
    iterations: int
    tol: float

    def to_csv(self) -> str:
        cid = np.empty(len(self.eigenvalues), dtype=int)
        for c, members in enumerate(self.clusters):
            cid[members] = c
        buf = io.StringIO()
        buf.write("index,eigenvalue,residual,cluster\n")
        for i, (lam, res) in enumerate(zip(self.eigenvalues, self.residuals)):
            buf.write(f"{i},{lam:.12e},{res:.3e},{cid[i]}\n")
        return buf.getvalue()


def cluster(eigenvalues, rel_gap: float = 0.05, abs_floor: float = 1e-8) -> list:
    """Group consecutive eigenvalues whose relative gap is below ``rel_gap``.

    The gap between neighbours a <= b is ``(b - a) / max(|b|, abs_floor)``.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0:
        return []
    groups = [[0]]
    for i in range(1, lam.size):
        gap = (lam[i] - lam[i - 1]) / max(abs(lam[i]), abs_floor)
        if gap < rel_gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _sign_convention(vecs):
    """Flip columns so the first clearly nonzero component is positive."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-8 * np.abs(col).max())
        if big.size and col[big[0]] < 0:
            out[:, j] = -col
    return out


def _orthonormal_against(q, basis, M):
    """Remove the M-components of ``q`` along the M-orthonormal ``basis``."""
    if basis is None:
        return q
    return q - basis @ (basis.T @ (M @ q))


def solve_smallest(system: AssembledSystem, k: int, tol: float = 1e-8, *,
                   seed: int = 0, max_iter: int = 500, block: int | None = None,
                   deflate=None, shift: float | None = None) -> SpectrumResult:
    """The k+1 smallest eigenpairs (λ₀ included) of ``K u = λ M u``.

    Parameters
    ----------
    system : AssembledSystem
    k : int
        Index of the largest wanted eigenvalue.
    tol : float
        Residual tolerance relative to ``‖Mu‖₂``.
    seed : int
        Seed of the random starting block; results are deterministic.
    deflate : ndarray of shape (n, d), optional
        M-orthonormal vectors whose span is projected out of the iteration
        (see :func:`deflate_constants`).

    Raises
    ------
    EigenError
        If ``K + σM`` cannot be factorized (for example M is not SPD).
    """
    K, M = system.K.tocsc(), system.M.tocsc()
    n = system.n_dofs
    want = k + 1
    if not 0 <= k < n - 1:
        raise ValueError(f"k must satisfy 0 <= k < n_dofs - 1, got k={k}, n={n}")
    b = min(n - (0 if deflate is None else deflate.shape[1]), block or (want + 5))
    sigma = -1e-3 * M.diagonal().sum() / n if shift is None else shift
    try:
        lu = spla.splu((K + sigma * M).tocsc())
    except RuntimeError as err:
        raise EigenError(f"factorization of K + σM failed: {err}") from None
    rng = np.random.default_rng(seed)
    x = _orthonormal_against(rng.standard_normal((n, b)), deflate, M)
    theta = np.zeros(b)
    vecs = x
    res = np.full(want, np.inf)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = lu.solve(M @ x)
        y = _orthonormal_against(y, deflate, M)
        q, _ = np.linalg.qr(y)
        kq = q.T @ (K @ q)
        mq = q.T @ (M @ q)
        kq = 0.5 * (kq + kq.T)
        mq = 0.5 * (mq + mq.T)
        try:
            theta, c = la.eigh(kq, mq)
        except la.LinAlgError as err:
            raise EigenError(f"Rayleigh-Ritz projection failed: {err}") from None
        vecs = q @ c
        x = vecs
        mv = M @ vecs[:, :want]
        r = K @ vecs[:, :want] - mv * theta[:want]
        res = np.linalg.norm(r, axis=0) / np.linalg.norm(mv, axis=0)
        if np.all(res <= tol):
            converged = True
            break
    lam = theta[:want].copy()
    u = _sign_convention(vecs[:, :want])
    return SpectrumResult(lam, u, res, cluster(lam), converged, it, tol)


def deflate_constants(system: AssembledSystem) -> "DeflatedSystem":
    """Wrap a closed-domain system so the constant kernel is projected out."""
    if not system.closed:
        raise ValueError("deflation of constants needs a closed domain")
    one = np.ones(system.n_dofs)
    nrm = np.sqrt(one @ (system.M @ one))
    return DeflatedSystem(system, (one / nrm)[:, None])


@dataclass(frozen=True, eq=False)
class DeflatedSystem:
    """A system together with an M-orthonormal basis of a removed subspace."""

    system: AssembledSystem
    basis: np.ndarray

    def solve(self, k: int, tol: float = 1e-8, **kw) -> SpectrumResult:
        return solve_smallest(self.system, k, tol, deflate=self.basis, **kw)


def m_orthonormality_defect(result: SpectrumResult, M) -> float:
    u = result.eigenvectors
    return float(np.max(np.abs(u.T @ (M @ u) - np.eye(u.shape[1]))))
