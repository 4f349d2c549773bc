"""Triangulated 2-orbifolds: construction, surgery and serialization."""
from .builders import build_disc, build_flat_torus, build_pillowcase, build_spindle
from .core import ConePoint, Development, MeshError, OrbiMesh, develop
from .io import read_mesh, read_sections, write_mesh
from .surgery import (
    Excision, excise_ball, excise_ball_detailed, grade_toward, new_index, refine,
)

__all__ = [
    "ConePoint", "Development", "Excision", "MeshError", "OrbiMesh",
    "build_disc", "build_flat_torus", "build_pillowcase", "build_spindle",
    "develop", "excise_ball", "excise_ball_detailed", "grade_toward", "new_index",
    "read_mesh", "read_sections", "refine", "write_mesh",
]
