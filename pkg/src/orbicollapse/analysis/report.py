"""Comma-separated tables and run manifests."""
from __future__ import annotations

import io
import json
import platform

import numpy as np

from .. import __version__

SWEEP_COLUMNS = ("epsilon", "j", "eigenvalue", "reference", "gap", "residual",
                 "discretization", "n_dofs")


def sweep_csv(records) -> str:
    """One row per (ε, j); columns in ``SWEEP_COLUMNS``."""
    buf = io.StringIO()
    buf.write(",".join(SWEEP_COLUMNS) + "\n")
    for r in records:
        for j, lam in enumerate(r.eigenvalues):
            buf.write(f"{r.epsilon!r},{j},{lam:.12e},{r.reference[j]:.12e},"
                      f"{r.gaps[j]:.6e},{r.residuals[j]:.3e},"
                      f"{r.discretization[j]:.6e},{r.n_dofs}\n")
    return buf.getvalue()


def table_csv(columns, rows) -> str:
    """A plain table; floats written with 12 significant digits."""
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_cell(x) for x in row) + "\n")
    return buf.getvalue()


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12e")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def manifest(config: dict, meshes: dict, checks: dict, extra: dict | None = None) -> str:
    """JSON run record: inputs, mesh sizes and hashes, assertion outcomes.

    Contains no timestamps so reruns with the same inputs are identical.
    """
    doc = {
        "tool": "orbicollapse",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": config,
        "meshes": {name: {"vertices": m.n_vertices, "triangles": m.n_triangles,
                          "hash": m.content_hash()} for name, m in meshes.items()},
        "checks": checks,
    }
    if extra:
        doc.update(extra)
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
