"""Command line: ``orbicollapse run|describe CONFIG [--threads N] [--seed S] [--out DIR]``.

Exit status: 0 when every check passes, 1 when a check fails, 2 for a
configuration error, 3 for a numerical failure.  Failures print one
line ``status=<kind> reason=<text>`` to standard error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from ..analysis.report import manifest
from ..analysis.sweep import SweepError
from ..assembly import AssemblyError
from ..csum import GluingError
from ..eigen import EigenError
from ..mesh.core import MeshError
from ..metric import MetricError
from .config import ConfigError, RunConfig, load_config
from .experiments import ASSERTIONS, RUNNERS, estimated_dofs

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (MeshError, MetricError, GluingError, AssemblyError, EigenError, SweepError,
                  np.linalg.LinAlgError, RuntimeError)


def _fail(kind: str, reason: str, code: int) -> int:
    print(f"status={kind} reason={' '.join(str(reason).split())}", file=sys.stderr)
    return code


def describe(cfg: RunConfig) -> str:
    """Resolved parameters, DOF estimates and the checks a run would make."""
    lines = [f"experiment: {cfg.experiment}"]
    for name in ("O1", "O2"):
        desc = cfg.get(name)
        if desc is not None:
            lines.append(f"{name}: {json.dumps(desc, sort_keys=True)} "
                         f"(about {estimated_dofs(desc)} vertices)")
    if cfg.get("eps") is not None and cfg.experiment in ("collapse", "smooth-approx"):
        eps = cfg["eps"] if cfg.experiment == "collapse" else cfg["eps"][:1]
        lines.append(f"eps ({len(eps)} values): " + ", ".join(f"{e:g}" for e in eps))
    if cfg.experiment == "smooth-approx":
        lines.append("widths: " + ", ".join(f"{w:g}" for w in cfg["widths"]))
    if cfg.experiment == "continuity":
        lines.append(f"trials: {cfg['trials']} with rho'' <= {cfg['rho']:g}")
    if cfg.experiment == "validate":
        from ..analysis.geometries import oracle_model
        lines.append(f"oracle: {oracle_model(cfg['O1'])} tolerance {cfg.tolerances['oracle_rel']:g}")
    lines.append(f"k: {cfg['k']} (eigenvalues j = 0..{cfg['k']})")
    lines.append(f"k_boundary: {cfg['k_boundary']}")
    lines.append("tolerances: " + ", ".join(f"{k}={v:g}" for k, v in sorted(cfg.tolerances.items())))
    lines.append(f"seed: {cfg['seed']}  threads: {cfg['threads']}  out: {cfg['out']}")
    lines.append("assertions:")
    bound = f"j <= {cfg['k']}"
    lines += ["  - " + a.replace("j <= k", bound) for a in ASSERTIONS[cfg.experiment]]
    return "\n".join(lines) + "\n"


def run(cfg: RunConfig) -> int:
    out = cfg["out"]
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as err:
        return _fail("config", f"cannot create output directory {out}: {err.strerror}", EXIT_CONFIG)
    try:
        outcome = RUNNERS[cfg.experiment](cfg)
    except ConfigError as err:
        return _fail("config", str(err), EXIT_CONFIG)
    except NUMERIC_ERRORS as err:
        return _fail("numerical", f"{type(err).__name__}: {err}", EXIT_NUMERIC)
    with open(os.path.join(out, "results.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(outcome.csv)
    if outcome.plot is not None:
        with open(os.path.join(out, "plot.svg"), "w", encoding="utf-8") as fh:
            fh.write(outcome.plot)
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(manifest(cfg.data, outcome.meshes, outcome.checks))
    failed = [name for name, ok in outcome.checks.items() if not ok]
    if failed:
        return _fail("assertion", "failed checks: " + ",".join(failed), EXIT_ASSERT)
    print(f"status=ok checks={len(outcome.checks)} out={out}")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="parallel sweep entries")
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--out", default=None, help="output directory")
    p = argparse.ArgumentParser(prog="orbicollapse", parents=[common],
                                description="Spectra of collapsing connected sums of 2-orbifolds.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run an experiment"), ("describe", "summarize a configuration")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("config", help="JSON configuration file")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = {"threads": args.threads, "seed": args.seed, "out": args.out}
    if args.threads is not None and args.threads < 1:
        return _fail("config", "field threads: must be >= 1", EXIT_CONFIG)
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as err:
        return _fail("config", str(err), EXIT_CONFIG)
    if args.command == "describe":
        sys.stdout.write(describe(cfg))
        return EXIT_OK
    return run(cfg)
