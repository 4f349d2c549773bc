"""Mesh surgery: ball excision, grading toward a vertex, quadrisection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._rings import Node, fan, orient, ring_counts, zipper
from .core import MeshError, OrbiMesh, develop


@dataclass(frozen=True)
class Excision:
    """Result of :func:`excise_ball_detailed`.

    Attributes
    ----------
    mesh : OrbiMesh
        The excised mesh.
    loop : int
        Index of the new boundary loop in ``mesh.boundary_loops``.
    loop_angles : ndarray
        Angle of each loop node about the former center, in loop order.
    radius : float
    kept_triangles : ndarray
        Old triangle index of each of the first ``len(kept_triangles)``
        triangles of the new mesh (the untouched ones).
    transfer : scipy.sparse.csr_matrix of shape (V_new, V_old)
        P1 interpolation of old nodal fields onto the new vertices.
    removed_area : float
        Chart area of the patch replaced by the ring triangulation minus
        the area of what replaced it, i.e. the area that left the mesh.
    """

    mesh: OrbiMesh
    loop: int
    loop_angles: np.ndarray
    radius: float
    kept_triangles: np.ndarray
    transfer: sp.csr_matrix
    removed_area: float


@dataclass
class _Patch:
    dev: object
    tris: np.ndarray  # patch triangle indices
    loop: list  # [Node] in angular order, phi unwrapped from loop[0]
    period: float
    interior: np.ndarray  # old vertices strictly inside the patch


def _extract_patch(mesh, center, radius):
    dev = develop(mesh, center, radius=radius * 1.5)
    dist = np.linalg.norm(dev.tri_pos, axis=2)
    inside = dev.placed & np.all(dist <= radius * (1 + 1e-12), axis=1)
    for t in mesh.vertex_triangles[center]:
        inside[t] = True
    tw = mesh._twin
    nxt = {}
    for t in np.flatnonzero(inside):
        for i in range(3):
            h = 3 * t + i
            o = tw[h]
            if o < 0:
                raise MeshError("the excision neighbourhood reaches the mesh boundary")
            if not inside[o // 3]:
                a = int(mesh.triangles[t, i])
                if a in nxt:
                    raise MeshError("patch around the center is not a disc")
                nxt[a] = (t, i)
    if not nxt:
        raise MeshError("patch covers the whole mesh")
    start = min(nxt)
    a = start
    order = []
    for _ in range(len(nxt)):
        order.append(a)
        t, i = nxt[a]
        a = int(mesh.triangles[t, (i + 1) % 3])
        if a == start:
            break
    if len(order) != len(nxt) or a != start:
        raise MeshError("patch boundary is not a single loop")
    t0, i0 = nxt[start]
    p0 = dev.tri_pos[t0, i0]
    phi = float(np.arctan2(p0[1], p0[0]))
    loop = []
    for a in order:
        t, i = nxt[a]
        pa = dev.tri_pos[t, i]
        pb = dev.tri_pos[t, (i + 1) % 3]
        loop.append(Node(a, float(np.hypot(*pa)), phi))
        dphi = np.arctan2(pa[0] * pb[1] - pa[1] * pb[0], pa @ pb)
        if dphi <= 0:
            raise MeshError("patch around the center is not star-shaped")
        phi += float(dphi)
    period = phi - loop[0].phi
    expected = 2 * np.pi / mesh.cone_order(center)
    if abs(period - expected) > 1e-8:
        raise MeshError("cone angle inside the patch does not match the center")
    ptris = np.flatnonzero(inside)
    pverts = np.unique(mesh.triangles[ptris])
    loop_ids = {n.vid for n in loop}
    interior = np.array([v for v in pverts if v not in loop_ids], dtype=np.int64)
    for v in interior:
        if not all(inside[t] for t in mesh.vertex_triangles[v]):
            raise MeshError("patch around the center is not a disc")
        if v != center and mesh.cone_order(v) > 1:
            raise MeshError(f"cone point {v} lies inside the surgery region")
    return _Patch(dev, ptris, loop, period, interior)


def _loop_radius(loop, period):
    """Radius of the patch polygon as a function of angle."""
    nodes = loop + [loop[0]._replace(phi=loop[0].phi + period)]
    phis = np.array([n.phi for n in nodes])
    pts = np.array([[n.r * np.cos(n.phi), n.r * np.sin(n.phi)] for n in nodes])

    def radius(phi):
        phi = loop[0].phi + np.mod(np.asarray(phi) - loop[0].phi, period)
        j = np.clip(np.searchsorted(phis, phi, side="right") - 1, 0, len(loop) - 1)
        p, q = pts[j], pts[j + 1]
        d = q - p
        u = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        num = p[..., 0] * d[..., 1] - p[..., 1] * d[..., 0]
        den = u[..., 0] * d[..., 1] - u[..., 1] * d[..., 0]
        return num / den

    return radius


def _trace_loop(triangles, start):
    """Boundary cycle through ``start``, following boundary half-edges."""
    he = np.stack([triangles, np.roll(triangles, -1, axis=1)], axis=2).reshape(-1, 2)
    pairs = {(int(a), int(b)) for a, b in he}
    nxt = {int(a): int(b) for a, b in he if (int(b), int(a)) not in pairs}
    loop = [start]
    v = nxt[start]
    while v != start:
        loop.append(v)
        v = nxt[v]
    return np.array(loop, dtype=np.int64)


def _locate(patch, mesh, points, period):
    """Barycentric weights of chart points in the developed patch."""
    pos = patch.dev.tri_pos[patch.tris]
    a = pos[:, 0]
    e = np.stack([pos[:, 1] - a, pos[:, 2] - a], axis=2)
    inv = np.linalg.inv(e)
    rows, cols, vals = [], [], []
    m = int(round(2 * np.pi / period))
    for k, p in enumerate(points):
        best, best_w, best_t = -np.inf, None, None
        for s in range(m):
            c, sn = np.cos(s * period), np.sin(s * period)
            q = np.array([c * p[0] - sn * p[1], sn * p[0] + c * p[1]])
            lam = np.einsum("tij,tj->ti", inv, q - a)
            w = np.column_stack([1 - lam.sum(1), lam])
            score = w.min(1)
            t = int(np.argmax(score))
            if score[t] > best:
                best, best_w, best_t = score[t], w[t], t
        if best < -1e-8:
            raise MeshError("new vertex falls outside the surgery patch")
        rows += [k] * 3
        cols += list(mesh.triangles[patch.tris[best_t]])
        vals += list(best_w)
    return rows, cols, vals


def _ring_remesh(mesh, center, patch_radius, r_in, n_in, *, hole, offset=0.0):
    patch = _extract_patch(mesh, center, patch_radius)
    loop, period = patch.loop, patch.period
    r_loop = np.array([n.r for n in loop])
    if r_in >= 0.95 * r_loop.min():
        raise MeshError("inner radius does not fit inside the surgery patch")
    removed = patch.interior if hole else patch.interior[patch.interior != center]
    keep = np.ones(mesh.n_vertices, bool)
    keep[removed] = False
    old_to_new = np.full(mesh.n_vertices, -1, dtype=np.int64)
    old_to_new[keep] = np.arange(keep.sum())
    nid = int(keep.sum())

    n0 = len(loop)
    log_ratio = np.log(r_loop.mean() / r_in)
    steps = max(1, int(np.ceil(log_ratio / (period / np.sqrt(n0 * n_in)))))
    radius_of = _loop_radius(loop, period)
    phi0 = loop[0].phi
    rings = [[n._replace(vid=int(old_to_new[n.vid])) for n in loop]]
    new_pts = []
    for i, cnt in enumerate(ring_counts(n0, n_in, steps), start=1):
        tau = 1.0 - i / steps
        phis = phi0 + period * (np.arange(cnt) + 0.5 * (i % 2) + 0.25) / cnt
        rad = r_in * (radius_of(phis) / r_in) ** tau
        ring = []
        for r, f in zip(rad, phis):
            ring.append(Node(nid, float(r), float(f)))
            new_pts.append((r, f))
            nid += 1
        rings.append(ring)
    inner_phi = phi0 + np.mod(offset + period * np.arange(n_in) / n_in - phi0, period)
    order = np.argsort(inner_phi, kind="stable")
    inner = [None] * n_in
    first_inner = nid
    for j in range(n_in):
        inner[j] = Node(first_inner + j, r_in, float(inner_phi[j]))
        new_pts.append((r_in, float(inner_phi[j])))
    nid += n_in
    rings.append([inner[j] for j in order])

    triples = []
    for outer, inn in zip(rings[:-1], rings[1:]):
        triples += zipper(outer, inn, period)
    if not hole:
        triples += fan(Node(int(old_to_new[center]), 0.0, 0.0), rings[-1], period)
    new_tris, new_cor = orient(triples)

    in_patch = np.zeros(mesh.n_triangles, bool)
    in_patch[patch.tris] = True
    kept = np.flatnonzero(~in_patch)
    weight = mesh.chart_weight[patch.tris]
    if np.ptp(weight) > 0:
        raise MeshError("chart weights vary inside the surgery patch")
    triangles = np.vstack([old_to_new[mesh.triangles[kept]], new_tris])
    corners = np.concatenate([mesh.corners[kept], new_cor])
    chart_weight = np.concatenate([mesh.chart_weight[kept], np.full(len(new_tris), weight[0])])

    pts_xy = np.array([[r * np.cos(f), r * np.sin(f)] for r, f in new_pts]).reshape(-1, 2)
    vertices = np.vstack([mesh.vertices[keep], mesh.vertices[center] + pts_xy])
    cones = tuple(
        type(c)(int(old_to_new[c.vertex]), c.order) for c in mesh.cone_points
        if keep[c.vertex]
    )
    loops = [old_to_new[lp] for lp in mesh.boundary_loops]
    if hole:
        loops.append(_trace_loop(triangles, first_inner))
    out = OrbiMesh(vertices, triangles, corners, cones, tuple(loops), chart_weight,
                   name=mesh.name, chart_kind=mesh.chart_kind)

    rows, cols, vals = [], [], []
    kept_v = np.flatnonzero(keep)
    rows += list(old_to_new[kept_v])
    cols += list(kept_v)
    vals += [1.0] * len(kept_v)
    r2, c2, v2 = _locate(patch, mesh, pts_xy, period)
    rows += [int(keep.sum()) + r for r in r2]
    cols += c2
    vals += v2
    transfer = sp.csr_matrix((vals, (rows, cols)), shape=(out.n_vertices, mesh.n_vertices))
    removed_area = float(
        np.sum(mesh.chart_weight[patch.tris] * mesh.signed_areas[patch.tris])
        - weight[0] * np.sum(0.5 * np.linalg.det(
            np.stack([new_cor[:, 1] - new_cor[:, 0], new_cor[:, 2] - new_cor[:, 0]], axis=2)
        ))
    )
    return out, kept, transfer, removed_area, inner_phi, first_inner


def excise_ball_detailed(mesh: OrbiMesh, center: int, r: float, k_boundary: int,
                         *, offset: float = 0.0) -> Excision:
    """Remove the metric ball of radius ``r`` about a vertex.

    The region around the ball is retriangulated by concentric rings whose
    radii interpolate geometrically between the new circle and the
    surrounding mesh.  The new boundary circle carries ``k_boundary``
    equally spaced nodes at angles ``offset + 2πj/k``.

    Raises
    ------
    MeshError
        If ``r <= 0``, ``k_boundary`` is not a power of two at least 8, the
        center is a cone point, or the ball comes near a cone point or the
        mesh boundary.
    """
    if not r > 0:
        raise MeshError(f"excision radius must be positive, got {r}")
    k = int(k_boundary)
    if k != k_boundary or k < 8 or k & (k - 1):
        raise MeshError(f"k_boundary must be a power of two >= 8, got {k_boundary}")
    if mesh.cone_order(center) > 1:
        raise MeshError("cannot excise a ball centred at a cone point")
    dev = develop(mesh, center, radius=4 * r)
    for c in mesh.cone_points:
        d = np.linalg.norm(dev.vertex_pos[c.vertex])
        if not np.isnan(d) and d <= r * (1 + 1e-9):
            raise MeshError(f"ball of radius {r} contains cone point {c.vertex}")
    h = float(np.max(mesh.incident_edge_lengths(center)))
    spacing = 2 * np.pi * r / k
    last = None
    for grow in (2.0, 1.5, 1.0, 0.6, 0.3):
        R = r + grow * max(h, spacing)
        try:
            out, kept, transfer, removed, phis, first = _ring_remesh(
                mesh, center, R, r, k, hole=True, offset=offset
            )
            break
        except MeshError as err:
            last = err
    else:
        raise MeshError(f"cannot excise ball of radius {r} at vertex {center}: {last}")
    loop_arr = out.boundary_loops[-1]
    angles = np.asarray(phis)[loop_arr - first]
    return Excision(out, len(out.boundary_loops) - 1, angles, float(r), kept, transfer, removed)


def excise_ball(mesh: OrbiMesh, center: int, r: float, k_boundary: int) -> OrbiMesh:
    """Mesh of ``mesh`` minus the open ball of radius ``r`` about ``center``."""
    return excise_ball_detailed(mesh, center, r, k_boundary).mesh


def grade_toward(mesh: OrbiMesh, vertex: int, ratio: float,
                 inner_nodes: int | None = None) -> OrbiMesh:
    """Refine geometrically toward ``vertex``.

    The star of the vertex is replaced by rings shrinking toward it, so
    that the shortest incident edge becomes ``ratio`` times the previous
    shortest one.  Cone points may be graded; they stay cone points.
    Vertices strictly inside the star are dropped and the remaining ones
    renumbered in their original order, so the graded vertex keeps its
    rank among survivors (use :func:`new_index` to find it).
    ``inner_nodes`` sets the node count of the innermost ring; more nodes
    give finer radial steps.
    """
    if not 0 < ratio <= 1:
        raise MeshError(f"grading ratio must lie in (0, 1], got {ratio}")
    if ratio == 1:
        return mesh
    lengths = mesh.incident_edge_lengths(vertex)
    r_in = ratio * float(lengths.min())
    period = 2 * np.pi / mesh.cone_order(vertex)
    n_in = max(3, int(np.ceil(period * 1.2))) if inner_nodes is None else int(inner_nodes)
    if n_in < 3:
        raise MeshError(f"inner ring needs at least 3 nodes, got {n_in}")
    last = None
    for grow in (2.0, 1.5, 1.0):
        try:
            out = _ring_remesh(mesh, vertex, grow * float(lengths.max()), r_in, n_in,
                               hole=False)[0]
            return out
        except MeshError as err:
            last = err
    raise MeshError(f"cannot grade toward vertex {vertex}: {last}")


def new_index(old: OrbiMesh, new: OrbiMesh, vertex: int) -> int:
    """Index in ``new`` of the vertex of ``old`` with the same coordinates."""
    d = np.linalg.norm(new.vertices - old.vertices[vertex], axis=1)
    i = int(np.argmin(d))
    if d[i] > 1e-12 * max(1.0, float(np.abs(old.vertices).max())):
        raise MeshError(f"vertex {vertex} does not survive in the new mesh")
    return i


def refine(mesh: OrbiMesh) -> OrbiMesh:
    """Quadrisect every triangle; markers and loops are carried along."""
    T, V = mesh.n_triangles, mesh.n_vertices
    he = mesh.half_edges
    key = np.sort(he, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(T, 3) + V  # midpoint vertex of edge corner i -> i+1
    tri = mesh.triangles
    c = mesh.corners
    mid = 0.5 * (c + np.roll(c, -1, axis=1))  # midpoint of edge i -> i+1
    m0, m1, m2 = inv[:, 0], inv[:, 1], inv[:, 2]
    new_tri = np.concatenate([
        np.column_stack([tri[:, 0], m0, m2]),
        np.column_stack([m0, tri[:, 1], m1]),
        np.column_stack([m2, m1, tri[:, 2]]),
        np.column_stack([m0, m1, m2]),
    ])
    new_cor = np.concatenate([
        np.stack([c[:, 0], mid[:, 0], mid[:, 2]], axis=1),
        np.stack([mid[:, 0], c[:, 1], mid[:, 1]], axis=1),
        np.stack([mid[:, 2], mid[:, 1], c[:, 2]], axis=1),
        np.stack([mid[:, 0], mid[:, 1], mid[:, 2]], axis=1),
    ])
    mid_xy = np.zeros((len(uniq), 2))
    mid_xy[inv.ravel() - V] = 0.5 * (
        mesh.vertices[he[:, 0]] + mesh.vertices[he[:, 1]]
    )
    edge_id = {(int(a), int(b)): int(e) for (a, b), e in zip(key, inv.ravel())}
    loops = []
    for lp in mesh.boundary_loops:
        out = []
        for a, b in zip(lp, np.roll(lp, -1)):
            out += [int(a), edge_id[(min(a, b), max(a, b))]]
        loops.append(np.array(out, dtype=np.int64))
    return OrbiMesh(
        np.vstack([mesh.vertices, mid_xy]), new_tri, new_cor, mesh.cone_points,
        tuple(loops), np.tile(mesh.chart_weight, 4), name=mesh.name, chart_kind=mesh.chart_kind,
    )
