"""Named factor geometries shared by the command line and the demos.

A descriptor is a mapping with a ``kind`` and mesh parameters::

    {"kind": "torus", "side": 6.283, "h": 0.1}
    {"kind": "pillowcase", "side": 6.283, "h": 0.2, "grading": 0.5}
    {"kind": "spindle", "m": 3, "h": 0.1}
    {"kind": "sphere", "h": 0.1}                 # flattened at the north pole
    {"kind": "sphere", "h": 0.1, "flat_pole": false}  # round

``gluing_point`` picks the vertex used for excision.
"""
from __future__ import annotations

import numpy as np

from ..mesh.builders import build_flat_torus, build_pillowcase, build_spindle
from ..metric import euclidean, flatten_near, round_sphere

TAU = 2 * np.pi
SPHERE_FLAT_RADIUS = (1.45, 1.565)


def build_factor(desc: dict):
    """(mesh, metric) for a descriptor."""
    kind = desc["kind"]
    h = float(desc.get("h", 0.1))
    if kind == "torus":
        mesh = build_flat_torus(float(desc.get("side", TAU)), h)
        return mesh, euclidean(mesh)
    if kind == "pillowcase":
        mesh = build_pillowcase(float(desc.get("side", TAU)), h, float(desc.get("grading", 1.0)))
        return mesh, euclidean(mesh)
    if kind == "spindle":
        mesh = build_spindle(int(desc["m"]), h)
        return mesh, round_sphere(mesh, float(desc.get("radius", 1.0)))
    if kind == "sphere":
        mesh = build_spindle(1, h)
        metric = round_sphere(mesh, 1.0)
        if desc.get("flat_pole", True):
            metric = flatten_near(metric, 0, *SPHERE_FLAT_RADIUS)
        return mesh, metric
    raise ValueError(f"unknown geometry kind {kind!r}")


def gluing_point(mesh, desc: dict) -> int:
    """Vertex nearest the descriptor's ``point``, defaulting per kind.

    Torus: the center (side/2, side/2).  Pillowcase: (side/4, side/4), half
    way between cone points.  Sphere: the north pole.
    """
    kind = desc["kind"]
    side = float(desc.get("side", TAU))
    default = {"torus": (side / 2, side / 2), "pillowcase": (side / 4, side / 4),
               "sphere": (0.0, 0.0), "spindle": (np.pi / 2, 0.0)}[kind]
    target = np.asarray(desc.get("point", default), dtype=float)
    return int(np.argmin(np.linalg.norm(mesh.vertices - target, axis=1)))


def oracle_model(desc: dict):
    """Reference-spectrum model of a closed factor, or None."""
    kind = desc["kind"]
    if kind in ("torus", "pillowcase"):
        return (kind, float(desc.get("side", TAU)))
    if kind == "spindle":
        return ("spindle", int(desc["m"]), float(desc.get("radius", 1.0)))
    if kind == "sphere" and not desc.get("flat_pole", True):
        return ("sphere", 1.0)
    return None
