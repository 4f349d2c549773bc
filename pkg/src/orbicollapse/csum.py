"""Collapsing connected sums (O, g_ε).

The first factor loses the ball of radius ε about ``p1`` and keeps its
metric g₁; the second loses the unit ball about ``p2`` and carries ε²g₂.
The two boundary circles then have equal length and are identified by
``x -> x / ε`` composed with a reflection, node to node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .assembly import assemble, dof_projection
from .mesh.core import MeshError, OrbiMesh, develop
from .mesh.io import format_block, mesh_from_block, read_sections
from .mesh.surgery import excise_ball_detailed
from .metric import (
    PIECEWISE, CollarFrame, MetricError, MetricField, is_flat_on,
    metric_from_section, metric_section, scale,
)


class GluingError(ValueError):
    """Raised when the two factors cannot be glued as requested."""


@dataclass(frozen=True)
class ConnectedSumConfig:
    """Parameters of the collapse.

    Attributes
    ----------
    epsilon : float
        Collapse parameter in (0, 1).
    p1, p2 : int
        Vertices of the first and second factor.
    k_boundary : int
        Nodes on each glued circle (a power of two).
    offset : float
        Rotation of the gluing; must be a multiple of 2π/k_boundary.
    """

    epsilon: float
    p1: int
    p2: int
    k_boundary: int = 32
    offset: float = 0.0
    radius2: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise GluingError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        step = 2 * np.pi / self.k_boundary
        if abs(self.offset / step - round(self.offset / step)) > 1e-9:
            raise GluingError("gluing offset must be a multiple of 2π/k_boundary")


@dataclass(frozen=True, eq=False)
class GluedComplex:
    """Two excised factors, their metrics and the identification of circles.

    Attributes
    ----------
    mesh1, mesh2 : OrbiMesh
        O₁(ε) and O₂(1); the glued circle is the last boundary loop of each.
    metric1 : MetricField
        g₁ on mesh1.
    metric2 : MetricField
        ε²g₂ on mesh2.
    pairing : ndarray of shape (k, 2)
        Rows ``(node on mesh1, node on mesh2)``.
    dof_map1, dof_map2 : ndarray
        Glued DOF of each vertex of mesh1 and mesh2.
    """

    config: ConnectedSumConfig
    mesh1: OrbiMesh
    mesh2: OrbiMesh
    metric1: MetricField
    metric2: MetricField
    pairing: np.ndarray
    dof_map1: np.ndarray
    dof_map2: np.ndarray
    n_dofs: int
    transfer1: object = field(default=None, repr=False)

    @property
    def epsilon(self) -> float:
        return self.config.epsilon

    @property
    def loop1(self) -> np.ndarray:
        return self.mesh1.boundary_loops[-1]

    @property
    def loop2(self) -> np.ndarray:
        return self.mesh2.boundary_loops[-1]

    def restrict1(self, u) -> np.ndarray:
        """The factor f¹ of a glued function."""
        return np.asarray(u)[self.dof_map1]

    def restrict2(self, u) -> np.ndarray:
        """The factor f² of a glued function."""
        return np.asarray(u)[self.dof_map2]

    def extend1(self, f1) -> np.ndarray:
        """Glued function equal to ``f1`` on mesh1 and 0 off it.

        Nodes on the glued circle keep their mesh1 values, so this is the
        pair (f, 0) only when ``f1`` vanishes on the circle.
        """
        out = np.zeros(self.n_dofs)
        out[self.dof_map1] = f1
        return out

    @cached_property
    def glued_mesh(self) -> OrbiMesh:
        """One closed mesh of O: mesh2 charts rescaled by ε to metric units."""
        eps = self.epsilon
        m1, m2 = self.mesh1, self.mesh2
        unpaired = np.ones(m2.n_vertices, bool)
        unpaired[self.pairing[:, 1]] = False
        vertices = np.vstack([m1.vertices, eps * m2.vertices[unpaired]])
        cones = list(m1.cone_points) + [
            type(c)(int(self.dof_map2[c.vertex]), c.order) for c in m2.cone_points
        ]
        return OrbiMesh(
            vertices,
            np.vstack([m1.triangles, self.dof_map2[m2.triangles]]),
            np.concatenate([m1.corners, eps * m2.corners]),
            tuple(cones), (), np.concatenate([m1.chart_weight, m2.chart_weight]),
            name=f"{m1.name}#{m2.name}",
        )

    @cached_property
    def glued_metric(self) -> MetricField:
        """g_ε on :attr:`glued_mesh` (tensors of ε²g₂ in rescaled charts)."""
        eps2 = self.epsilon ** 2
        g = np.concatenate([self.metric1.tensors, self.metric2.tensors / eps2])
        return MetricField(self.glued_mesh, g, PIECEWISE)

    @cached_property
    def collar(self) -> CollarFrame:
        return collar_frame(self)

    def system(self):
        return assemble(self)


# -- construction ------------------------------------------------------------
def _excise_flat(mesh, metric, center, radius, k, offset, label):
    if mesh.cone_order(center) > 1:
        raise GluingError(f"{label}: gluing at a cone point is not supported")
    try:
        ex = excise_ball_detailed(mesh, center, radius, k, offset=offset)
    except MeshError as err:
        raise GluingError(f"{label}: {err}") from None
    replaced = np.setdiff1d(np.arange(mesh.n_triangles), ex.kept_triangles)
    if not is_flat_on(metric, replaced):
        raise GluingError(f"{label}: metric is not flat on the excision annulus")
    n_new = ex.mesh.n_triangles - len(ex.kept_triangles)
    g = np.concatenate([metric.tensors[ex.kept_triangles],
                        np.broadcast_to(np.eye(2), (n_new, 2, 2))])
    return ex, MetricField(ex.mesh, g, metric.tag)


def _pair_loops(ex1, ex2, k, offset):
    """Node pairs and a check that the gluing reverses loop orientation."""
    step = 2 * np.pi / k
    loop1 = ex1.mesh.boundary_loops[ex1.loop]
    loop2 = ex2.mesh.boundary_loops[ex2.loop]
    idx2 = np.mod(np.rint((ex2.loop_angles - offset) / step).astype(int), k)
    by_index = dict(zip(idx2.tolist(), loop2.tolist()))
    idx1 = np.mod(np.rint(ex1.loop_angles / step).astype(int), k)
    partner = np.array([by_index[int(np.mod(-j, k))] for j in idx1], dtype=np.int64)
    pairs = np.column_stack([loop1, partner])
    nxt2 = dict(zip(loop2.tolist(), np.roll(loop2, -1).tolist()))
    for (a, pa), (b, pb) in zip(pairs, np.roll(pairs, -1, axis=0)):
        if nxt2[int(pb)] != int(pa):
            raise GluingError("boundary identification does not reverse orientation")
    return pairs


def build_connected_sum(O1, O2, config: ConnectedSumConfig) -> GluedComplex:
    """Glue ``O1 = (mesh, g1)`` and ``O2 = (mesh, g2)`` at ``p1``, ``p2``.

    Both factors must be closed and flat on the excised neighbourhoods.
    Circle nodes sit at angles 2πj/k about ``p1`` and at
    ``offset + 2πj/k`` about ``p2``; node at angle α on the first circle is
    glued to the node at angle ``offset - α`` on the second.

    Raises
    ------
    GluingError
        On open factors, cone points at the gluing points or on the unit
        circle about ``p2``, or non-flat excision neighbourhoods.
    """
    (mesh1, g1), (mesh2, g2) = O1, O2
    if not (mesh1.is_closed and mesh2.is_closed):
        raise GluingError("both factors must be closed")
    eps, k = config.epsilon, config.k_boundary
    ex1, h1 = _excise_flat(mesh1, g1, config.p1, eps, k, 0.0, "first factor")
    ex2, h2 = _excise_flat(mesh2, g2, config.p2, config.radius2, k, config.offset,
                           "second factor")
    pairs = _pair_loops(ex1, ex2, k, config.offset)
    return _from_parts(config, ex1.mesh, ex2.mesh, h1, scale(h2, eps ** 2), pairs,
                       transfer1=ex1.transfer)


def _from_parts(config, mesh1, mesh2, metric1, metric2, pairs, transfer1=None):
    n1 = mesh1.n_vertices
    dof2 = np.full(mesh2.n_vertices, -1, dtype=np.int64)
    dof2[pairs[:, 1]] = pairs[:, 0]
    free = dof2 < 0
    dof2[free] = n1 + np.arange(int(free.sum()))
    return GluedComplex(config, mesh1, mesh2, metric1, metric2, pairs,
                        np.arange(n1, dtype=np.int64), dof2, int(n1 + free.sum()),
                        transfer1)


# -- integrals ---------------------------------------------------------------
def _factor_masses(cx):
    s1 = assemble(cx.mesh1, cx.metric1)
    s2 = assemble(cx.mesh2, cx.metric2)
    return s1.M, s2.M


def glued_l2_inner(cx: GluedComplex, u, v) -> float:
    """⟨u, v⟩ = ∫ u¹v¹ dv_{g₁} + ∫ u²v² dv_{ε²g₂} over the two factors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (cx.n_dofs,) or v.shape != (cx.n_dofs,):
        raise GluingError(f"functions must have {cx.n_dofs} glued DOFs")
    m1, m2 = _factor_masses(cx)
    u1, v1 = u[cx.dof_map1], v[cx.dof_map1]
    u2, v2 = u[cx.dof_map2], v[cx.dof_map2]
    return float(u1 @ (m1 @ v1) + u2 @ (m2 @ v2))


def glued_volume(cx: GluedComplex) -> float:
    one = np.ones(cx.n_dofs)
    return glued_l2_inner(cx, one, one)


# -- collar coordinates ------------------------------------------------------
def _circle_center(corners, i, radius):
    """Center of the excised disc from the boundary edge corner i -> i+1."""
    a, b = corners[i], corners[(i + 1) % 3]
    d = b - a
    L = np.linalg.norm(d)
    right = np.array([d[1], -d[0]]) / L
    return 0.5 * (a + b) + right * np.sqrt(max(radius ** 2 - 0.25 * L ** 2, 0.0))


def _side_positions(mesh, metric, radius, reach):
    loop = mesh.boundary_loops[-1]
    he = mesh.half_edges
    bnd = mesh.boundary_half_edges()
    on_loop = {(int(a), int(b)) for a, b in zip(loop, np.roll(loop, -1))}
    h = next(int(x) for x in bnd if (int(he[x, 0]), int(he[x, 1])) in on_loop)
    t, i = divmod(h, 3)
    center = _circle_center(mesh.corners[t], i, radius)
    dev = develop(mesh, root=t, origin=center, radius=radius + reach)
    placed = np.flatnonzero(dev.placed)
    pos = dev.tri_pos[placed]
    dmin = np.min(np.linalg.norm(pos, axis=2), axis=1)
    bad = ~np.all(np.abs(metric.tensors[placed] - np.eye(2)) < 1e-10, axis=(1, 2))
    limit = reach
    if np.any(bad):
        limit = min(limit, float(dmin[bad].min()) - radius)
    for c in mesh.cone_points:
        d = np.linalg.norm(dev.vertex_pos[c.vertex])
        if not np.isnan(d):
            limit = min(limit, float(d) - radius)
    keep = dmin - radius < limit
    iface = np.array([t for t in placed if any(
        (int(mesh.triangles[t, j]), int(mesh.triangles[t, (j + 1) % 3])) in on_loop
        for j in range(3))], dtype=np.int64)
    return placed[keep], pos[keep], max(limit, 0.0), iface


def hole_positions(cx: GluedComplex, reach: float) -> np.ndarray:
    """Flat-chart position on ``mesh1`` relative to the excised center ``p1``.

    Rows are NaN for vertices outside the region unfolded up to ``reach``.
    Angles are measured in the chart frame of the first factor, the frame
    in which circle node ``j`` sits at angle 2πj/k.
    """
    mesh = cx.mesh1
    loop = cx.loop1
    he = mesh.half_edges
    on_loop = {(int(a), int(b)) for a, b in zip(loop, np.roll(loop, -1))}
    h = next(int(x) for x in mesh.boundary_half_edges()
             if (int(he[x, 0]), int(he[x, 1])) in on_loop)
    t, i = divmod(h, 3)
    center = _circle_center(mesh.corners[t], i, cx.epsilon)
    return develop(mesh, root=t, origin=center, radius=reach).vertex_pos


def hole_distances(cx: GluedComplex, reach: float) -> np.ndarray:
    """Distance on ``mesh1`` from the excised center, ``inf`` beyond ``reach``."""
    d = np.linalg.norm(hole_positions(cx, reach), axis=1)
    return np.where(np.isfinite(d) & (d <= reach), d, np.inf)


def collar_frame(cx: GluedComplex, reach: float | None = None) -> CollarFrame:
    """Flat polar coordinates about the glued circle on both sides."""
    eps = cx.epsilon
    reach = 0.5 if reach is None else reach
    t1, p1, r1, i1 = _side_positions(cx.mesh1, cx.metric1, eps, reach)
    g2 = MetricField(cx.mesh2, cx.metric2.tensors / eps ** 2)
    t2, p2, r2, i2 = _side_positions(cx.mesh2, g2, 1.0, reach / eps)
    off = cx.mesh1.n_triangles
    return CollarFrame(
        eps,
        np.concatenate([t1, t2 + off]),
        np.concatenate([p1, eps * p2]),
        np.concatenate([i1, i2 + off]),
        min(r1, eps * r2),
    )


# -- serialization -----------------------------------------------------------
def write_complex(cx: GluedComplex, path) -> None:
    """Two mesh+metric blocks followed by the PAIRING block."""
    c = cx.config
    cfg = [[format(c.epsilon, ".17g"), str(c.p1), str(c.p2), str(c.k_boundary),
            format(c.offset, ".17g")]]
    text = "# orbicollapse glued complex v1\n"
    text += format_block(cx.mesh1, [metric_section(cx.metric1)], label="factor1")
    text += format_block(cx.mesh2, [metric_section(cx.metric2)], label="factor2")
    rows = [[str(a), str(b)] for a, b in cx.pairing]
    text += "BLOCK gluing\n" + f"CONFIG 1\n{' '.join(cfg[0])}\n"
    text += f"PAIRING {len(rows)}\n" + "".join(f"{a} {b}\n" for a, b in rows)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def read_complex(path) -> GluedComplex:
    blocks = read_sections(path)
    if len(blocks) != 3:
        raise MeshError("a glued complex file has exactly three blocks")
    b1, b2, b3 = blocks
    m1, m2 = mesh_from_block(b1), mesh_from_block(b2)
    try:
        g1 = metric_from_section(m1, b1["METRIC"])
        g2 = metric_from_section(m2, b2["METRIC"])
        eps, p1, p2, k, off = b3["CONFIG"][0]
        pairs = np.array([[int(a), int(b)] for a, b in b3["PAIRING"]], dtype=np.int64)
    except (KeyError, ValueError) as err:
        raise MeshError(f"malformed glued complex file: {err}") from None
    cfg = ConnectedSumConfig(float(eps), int(p1), int(p2), int(k), float(off))
    return _from_parts(cfg, m1, m2, g1, g2, pairs)
