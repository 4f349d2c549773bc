"""The collapsing sweep: spectra of connected sums as ε decreases."""
from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..assembly import assemble
from ..csum import ConnectedSumConfig, GluedComplex, build_connected_sum
from ..eigen import EigenError, SpectrumResult, solve_smallest
from ..metric import MetricField


class SweepError(RuntimeError):
    """A sweep entry failed; ``records`` holds the entries finished before it."""

    def __init__(self, message, records):
        super().__init__(message)
        self.records = records


@dataclass(frozen=True)
class SweepRecord:
    """One ε of the sweep.

    ``gaps[j] = |λ_j(O, g_ε) - λ_j(O₁, g₁)|`` against the discrete first
    factor spectrum on the unexcised mesh.  ``discretization[j]`` estimates
    the mesh error of that reference; gaps below it are not resolved.
    """

    epsilon: float
    eigenvalues: np.ndarray
    reference: np.ndarray
    gaps: np.ndarray
    residuals: np.ndarray
    n_dofs: int
    iterations: int
    converged: bool
    seconds: float
    mesh_hashes: tuple
    discretization: np.ndarray
    complex: GluedComplex | None = field(default=None, repr=False, compare=False)
    spectrum: SpectrumResult | None = field(default=None, repr=False, compare=False)


def first_factor_spectrum(O1, k: int, seed: int = 0) -> SpectrumResult:
    mesh, metric = O1
    return solve_smallest(assemble(mesh, metric), k, seed=seed)


def discretization_estimate(O1, k: int, reference, oracle=None, seed: int = 0) -> np.ndarray:
    """Mesh error of the discrete λ_j(O₁), j <= k.

    Against ``oracle`` when given; otherwise from one uniform refinement
    with second-order extrapolation, |λ_h - λ_{h/2}| · 4/3.
    """
    reference = np.asarray(reference, dtype=float)[: k + 1]
    if oracle is not None:
        return np.abs(reference - np.asarray(oracle, dtype=float)[: k + 1])
    from ..mesh.surgery import refine

    mesh, metric = O1
    fine = refine(mesh)
    fine_metric = MetricField(fine, np.tile(metric.tensors, (4, 1, 1)), metric.tag)
    finer = solve_smallest(assemble(fine, fine_metric), k, seed=seed).eigenvalues
    return np.abs(reference - finer) * 4.0 / 3.0


def _entry(O1, O2, template, eps, k, reference, disc, seed, keep):
    start = time.perf_counter()
    cx = build_connected_sum(O1, O2, dataclasses.replace(template, epsilon=float(eps)))
    res = solve_smallest(cx.system(), k, seed=seed)
    if not res.converged:
        raise EigenError(f"eigensolver did not converge at epsilon={eps:g}")
    lam = res.eigenvalues
    return SweepRecord(
        float(eps), lam, reference, np.abs(lam - reference), res.residuals, cx.n_dofs,
        res.iterations, res.converged, time.perf_counter() - start,
        (cx.mesh1.content_hash(), cx.mesh2.content_hash()), disc,
        cx if keep else None, res if keep else None,
    )


def collapse_sweep(O1, O2, template: ConnectedSumConfig, eps_list, k: int, *,
                   threads: int = 1, seed: int = 0, reference=None, oracle=None,
                   keep: bool = False) -> list:
    """Spectra of the connected sums at each ε in ``eps_list``.

    Parameters
    ----------
    O1, O2 : (OrbiMesh, MetricField)
    template : ConnectedSumConfig
        Gluing parameters; its ε is replaced by each swept value.
    eps_list : sequence of float, strictly decreasing
    k : int
    threads : int
        Entries run concurrently; records are returned in ``eps_list`` order.
    reference : array, optional
        λ_j(O₁) for j <= k; computed on the O₁ mesh when omitted.
    oracle : array, optional
        Exact λ_j(O₁), used for the discretization estimate.
    keep : bool
        Attach the glued complex and full spectrum to each record.

    Raises
    ------
    SweepError
        When an entry fails; earlier entries are attached as ``records``.
    """
    eps = np.asarray(eps_list, dtype=float)
    if eps.size == 0 or np.any(np.diff(eps) >= 0):
        raise ValueError("eps_list must be nonempty and strictly decreasing")
    if reference is None:
        reference = first_factor_spectrum(O1, k, seed).eigenvalues
    reference = np.asarray(reference, dtype=float)[: k + 1]
    disc = discretization_estimate(O1, k, reference, oracle, seed)
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        futures = [pool.submit(_entry, O1, O2, template, e, k, reference, disc, seed, keep)
                   for e in eps]
        records = []
        for e, fut in zip(eps, futures):
            try:
                records.append(fut.result())
            except Exception as err:  # noqa: BLE001 - reported with partial results
                for f in futures:
                    f.cancel()
                raise SweepError(f"sweep failed at epsilon={e:g}: {err}", records) from err
    return records


def gaps_non_increasing(records, slack: float = 0.10) -> np.ndarray:
    """Per j: each gap <= (1 + slack) x the previous gap + the reference's mesh error."""
    g = np.array([r.gaps for r in records])
    floor = records[0].discretization + 1e-9
    return np.all(g[1:] <= (1 + slack) * g[:-1] + floor, axis=0)


def final_gap_ok(records, rel: float = 0.10) -> np.ndarray:
    """Per j: last gap <= rel x max(λ_j(O₁), 1)."""
    last = records[-1]
    return last.gaps <= rel * np.maximum(last.reference, 1.0)
