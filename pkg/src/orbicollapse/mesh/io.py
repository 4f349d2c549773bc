"""Plain-text mesh format.

A file is a sequence of blocks (``BLOCK <label>``; the first may be
implicit), each holding sections introduced by ``<NAME> <rows>``::

    VERTICES n        index x y
    TRIANGLES n       index i j k
    CORNERS n         index x0 y0 x1 y1 x2 y2
    CONES n           vertex order
    BOUNDARY n        one loop per row, as a vertex index list
    CHARTWEIGHT n     triangle weight

Floats are written with 17 significant digits, which round-trips IEEE
doubles exactly.  Lines starting with ``#`` are comments.  Other modules
append their own sections (``METRIC``, ``PAIRING``) to a block.
"""
from __future__ import annotations

import io
import os

import numpy as np

from .core import ConePoint, MeshError, OrbiMesh

KNOWN_HEADERS = ("NAME", "CHARTKIND")


def fmt(x) -> str:
    return format(float(x), ".17g")


def mesh_sections(mesh: OrbiMesh) -> list:
    """(name, rows) pairs describing ``mesh``; rows are lists of strings."""
    v = [[str(i), fmt(x), fmt(y)] for i, (x, y) in enumerate(mesh.vertices)]
    t = [[str(i)] + [str(int(a)) for a in tri] for i, tri in enumerate(mesh.triangles)]
    c = [[str(i)] + [fmt(x) for x in cor.ravel()] for i, cor in enumerate(mesh.corners)]
    cones = [[str(cp.vertex), str(cp.order)] for cp in mesh.cone_points]
    loops = [[str(int(a)) for a in lp] for lp in mesh.boundary_loops]
    w = [[str(i), fmt(x)] for i, x in enumerate(mesh.chart_weight)]
    return [
        ("VERTICES", v), ("TRIANGLES", t), ("CORNERS", c), ("CONES", cones),
        ("BOUNDARY", loops), ("CHARTWEIGHT", w),
    ]


def format_block(mesh: OrbiMesh, extra=(), label: str | None = None) -> str:
    out = []
    if label is not None:
        out.append(f"BLOCK {label}")
    out.append(f"NAME {mesh.name}")
    out.append(f"CHARTKIND {mesh.chart_kind}")
    for name, rows in list(mesh_sections(mesh)) + list(extra):
        out.append(f"{name} {len(rows)}")
        out.extend(" ".join(r) for r in rows)
    return "\n".join(out) + "\n"


def write_mesh(mesh: OrbiMesh, path, extra=()) -> None:
    """Write ``mesh`` (plus ``extra`` (name, rows) sections) to ``path``."""
    text = "# orbicollapse mesh v1\n" + format_block(mesh, extra)
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    if isinstance(source, str) and "\n" in source:
        return source
    raise MeshError(f"cannot read mesh from {source!r}")


def read_sections(source) -> list:
    """Parse a mesh file into a list of blocks.

    Each block is a dict mapping section names to lists of token rows, plus
    the scalar headers ``NAME``/``CHARTKIND`` and ``BLOCK`` (the label).
    """
    lines = [ln.strip() for ln in io.StringIO(_text(source))]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    blocks = [{}]
    k = 0
    while k < len(lines):
        head = lines[k].split()
        k += 1
        key = head[0]
        if key == "BLOCK":
            if blocks[-1]:
                blocks.append({})
            blocks[-1]["BLOCK"] = " ".join(head[1:])
            continue
        if key in KNOWN_HEADERS:
            blocks[-1][key] = " ".join(head[1:])
            continue
        if len(head) != 2 or not head[1].isdigit():
            raise MeshError(f"malformed section header {lines[k - 1]!r}")
        n = int(head[1])
        if k + n > len(lines):
            raise MeshError(f"section {key} is truncated")
        blocks[-1][key] = [ln.split() for ln in lines[k:k + n]]
        k += n
    return blocks


def mesh_from_block(block: dict) -> OrbiMesh:
    try:
        v = np.array([[float(x) for x in r[1:3]] for r in block["VERTICES"]]).reshape(-1, 2)
        t = np.array([[int(x) for x in r[1:4]] for r in block["TRIANGLES"]], dtype=np.int64)
        c = np.array([[float(x) for x in r[1:7]] for r in block["CORNERS"]]).reshape(-1, 3, 2)
    except KeyError as err:
        raise MeshError(f"missing section {err.args[0]}") from None
    cones = tuple(ConePoint(int(a), int(b)) for a, b in block.get("CONES", []))
    loops = tuple(np.array([int(x) for x in r], dtype=np.int64) for r in block.get("BOUNDARY", []))
    w = block.get("CHARTWEIGHT")
    w = None if w is None else np.array([float(r[1]) for r in w])
    return OrbiMesh(v, t, c, cones, loops, w, name=block.get("NAME", "mesh"),
                    chart_kind=block.get("CHARTKIND", "flat"))


def read_mesh(source) -> OrbiMesh:
    """Read the first mesh block of a file (path, file object or text)."""
    return mesh_from_block(read_sections(source)[0])
