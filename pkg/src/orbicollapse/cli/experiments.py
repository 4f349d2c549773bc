"""The experiments a run configuration can request.

Each runner returns an :class:`Outcome`: the results table, named
pass/fail checks, an optional SVG plot and the meshes for the manifest.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..analysis import (collapse_sweep, continuity_check, final_gap_ok, gaps_non_increasing,
                        random_spd_perturbation, reference_spectrum, smooth_approx_check)
from ..analysis.geometries import build_factor, gluing_point, oracle_model
from ..analysis.report import SWEEP_COLUMNS, sweep_csv, table_csv
from ..assembly import assemble
from ..csum import ConnectedSumConfig, build_connected_sum
from ..eigen import solve_smallest
from ..mesh.builders import _grid_size
from ..metric import rho_double_prime, scale
from .config import ConfigError, RunConfig
from .plot import log_log_svg


@dataclass
class Outcome:
    csv: str
    checks: dict
    plot: str | None = None
    meshes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _factor(cfg: RunConfig, name: str):
    desc = cfg[name]
    mesh, metric = build_factor(desc)
    return desc, mesh, metric


def _oracle(desc, count):
    model = oracle_model(desc)
    if model is None:
        raise ConfigError(f"field O1/kind", f"no reference spectrum for {desc['kind']!r}")
    return reference_spectrum(model, count)


def run_spectrum(cfg: RunConfig) -> Outcome:
    _, mesh, metric = _factor(cfg, "O1")
    res = solve_smallest(assemble(mesh, metric), cfg["k"], cfg.tolerances["eigen"],
                         seed=cfg["seed"])
    return Outcome(res.to_csv(), {"converged": res.converged}, meshes={"O1": mesh})


def run_validate(cfg: RunConfig) -> Outcome:
    desc, mesh, metric = _factor(cfg, "O1")
    k = cfg["k"]
    oracle = _oracle(desc, k + 1)
    res = solve_smallest(assemble(mesh, metric), k, cfg.tolerances["eigen"], seed=cfg["seed"])
    tol = cfg.tolerances["oracle_rel"]
    err = np.abs(res.eigenvalues - oracle) / np.maximum(np.abs(oracle), 1.0)
    rows = [(j, lam, o, e, r) for j, (lam, o, e, r) in
            enumerate(zip(res.eigenvalues, oracle, err, res.residuals))]
    csv = table_csv(("index", "eigenvalue", "oracle", "rel_error", "residual"), rows)
    checks = {"converged": res.converged, f"oracle_within_{tol:g}": bool(np.all(err <= tol))}
    return Outcome(csv, checks, meshes={"O1": mesh})


def _template(cfg, mesh1, desc1, mesh2, desc2):
    return ConnectedSumConfig(cfg["eps"][0], gluing_point(mesh1, desc1),
                              gluing_point(mesh2, desc2), cfg["k_boundary"])


def run_collapse(cfg: RunConfig) -> Outcome:
    d1, m1, g1 = _factor(cfg, "O1")
    d2, m2, g2 = _factor(cfg, "O2")
    k = cfg["k"]
    model = oracle_model(d1)
    oracle = None if model is None else reference_spectrum(model, k + 1)
    records = collapse_sweep((m1, g1), (m2, g2), _template(cfg, m1, d1, m2, d2), cfg["eps"], k,
                             threads=cfg["threads"], seed=cfg["seed"], oracle=oracle)
    tol = cfg.tolerances
    checks = {
        "converged": all(r.converged for r in records),
        f"gaps_non_increasing_slack_{tol['gap_slack']:g}":
            bool(np.all(gaps_non_increasing(records, tol["gap_slack"]))),
        f"final_gap_within_{tol['final_rel']:g}": bool(np.all(final_gap_ok(records, tol["final_rel"]))),
    }
    eps = [r.epsilon for r in records]
    series = {f"j={j}": [r.gaps[j] for r in records] for j in range(k + 1)}
    plot = log_log_svg(eps, series, title="collapse gaps |λ_j(O,g_ε) - λ_j(O₁)|",
                       xlabel="ε", ylabel="gap")
    return Outcome(sweep_csv(records), checks, plot, {"O1": m1, "O2": m2})


def run_continuity(cfg: RunConfig) -> Outcome:
    _, mesh, metric = _factor(cfg, "O1")
    k, seed = cfg["k"], cfg["seed"]
    base = solve_smallest(assemble(mesh, metric), k, cfg.tolerances["eigen"], seed=seed)
    rng = np.random.default_rng(seed)
    rows, ok = [], True
    trials = [("trial", i, random_spd_perturbation(metric, cfg["rho"], rng))
              for i in range(cfg["trials"])]
    trials += [("scale", c, scale(metric, c)) for c in (0.5, 2.0)]
    for kind, label, g in trials:
        delta = rho_double_prime(metric, g).rho_pp
        rep = continuity_check(base, assemble(mesh, g), delta, k, seed=seed)
        ok &= rep.passed
        for j, ratio in enumerate(rep.ratios):
            if np.isfinite(ratio):
                rows.append((f"{kind}:{label:g}", j, delta, ratio, rep.lower, rep.upper, rep.passed))
    csv = table_csv(("case", "j", "delta", "ratio", "lower", "upper", "passed"), rows)
    return Outcome(csv, {"envelope_all_trials": bool(ok)}, meshes={"O1": mesh})


def run_smooth_approx(cfg: RunConfig) -> Outcome:
    d1, m1, g1 = _factor(cfg, "O1")
    d2, m2, g2 = _factor(cfg, "O2")
    k, seed = cfg["k"], cfg["seed"]
    cx = build_connected_sum((m1, g1), (m2, g2), _template(cfg, m1, d1, m2, d2))
    ref = solve_smallest(assemble(m1, g1), k, seed=seed).eigenvalues
    rep = smooth_approx_check(cx, cfg["widths"], k, ref, seed=seed)
    rows = []
    for i, w in enumerate(rep.widths):
        for j in range(k + 1):
            rows.append((w, rep.deltas[i], j, rep.mollified[i, j], rep.glued[j],
                         rep.reference[j], rep.margin[i, j]))
    csv = table_csv(("width", "delta", "j", "mollified", "glued", "reference", "margin"), rows)
    checks = {"envelope": bool(np.all(rep.envelope_ok)),
              "composite_inequality": bool(np.all(rep.margin >= 0)),
              "delta_non_increasing": rep.deltas_monotone}
    return Outcome(csv, checks, meshes={"O1": m1, "O2": m2, "glued": cx.glued_mesh})


RUNNERS = {
    "spectrum": run_spectrum,
    "validate": run_validate,
    "collapse": run_collapse,
    "continuity": run_continuity,
    "smooth-approx": run_smooth_approx,
}

ASSERTIONS = {
    "spectrum": ["eigensolver converged (residual <= eigen tolerance)"],
    "validate": ["eigensolver converged",
                 "|λ_j - oracle_j| <= oracle_rel * max(oracle_j, 1) for j <= k"],
    "collapse": ["eigensolver converged at every ε",
                 "gaps |λ_j(O,g_ε) - λ_j(O₁)| non-increasing in ε within gap_slack, for j <= k",
                 "final gap <= final_rel * max(λ_j(O₁), 1) for j <= k"],
    "continuity": ["λ_j(g)/λ_j(g') in [exp(-3δ), exp(3δ)] for every trial and j <= k",
                   "exact scaling g' = c g for c in {0.5, 2}"],
    "smooth-approx": ["eigenvalue ratios in [exp(-3δ_w), exp(3δ_w)] for each width",
                      "|λ_j(moll) - λ_j(O₁)| <= |λ_j(g_ε) - λ_j(O₁)| + (exp(3δ_w) - 1) λ_j(g_ε)",
                      "δ_w non-increasing as the width decreases"],
}


def estimated_dofs(desc: dict) -> int:
    """Vertex count predicted from the mesh parameters, without meshing."""
    h = float(desc.get("h", 0.1))
    side = float(desc.get("side", 2 * np.pi))
    if desc["kind"] == "torus":
        return _grid_size(side, h, 2) ** 2
    if desc["kind"] == "pillowcase":
        return _grid_size(side, h, 4) ** 2 // 2 + 2
    m = int(desc.get("m", 1))
    return int(round(4 * np.pi / m / (np.sqrt(3) / 4 * h * h) / 2))
