"""Triangulated 2-orbifolds.

An :class:`OrbiMesh` is the underlying surface of a closed or bounded
2-orbifold with isolated cone points.  Geometry lives per triangle: every
triangle carries the coordinates of its three corners in its own planar
chart (``corners``).  Charts of neighbouring triangles differ by a rigid
motion, which lets periodic identifications (torus, pillowcase) and
quotient seams (spindles) be represented without any global embedding.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class MeshError(ValueError):
    """Raised when a mesh operation's preconditions are violated."""


@dataclass(frozen=True)
class ConePoint:
    """Cone vertex with cyclic isotropy of order ``order`` (angle 2π/order)."""

    vertex: int
    order: int

    def __post_init__(self):
        if self.order < 2:
            raise MeshError(f"cone order must be >= 2, got {self.order}")


@dataclass(frozen=True, eq=False)
class OrbiMesh:
    """Discrete orbifold: triangles with per-triangle chart coordinates.

    Parameters
    ----------
    vertices : ndarray of shape (V, 2)
        Representative planar coordinates of each vertex.  Informational;
        all geometry is taken from ``corners``.
    triangles : ndarray of shape (T, 3)
        Vertex indices, positively oriented in each triangle's chart.
    corners : ndarray of shape (T, 3, 2)
        Chart coordinates of the three corners of each triangle.
    cone_points : tuple of ConePoint
    boundary_loops : tuple of ndarray
        Ordered vertex cycles; consecutive entries are joined by a boundary
        edge traversed in that direction by its triangle.
    chart_weight : ndarray of shape (T,)
        Multiplies every element integral (1/|Γ| for chart lifts).
    chart_kind : {"flat", "polar"}
        "polar" marks charts that are geodesic polar coordinates about the
        chart origin (used by spindles); it only informs metric builders.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    corners: np.ndarray
    cone_points: tuple = ()
    boundary_loops: tuple = ()
    chart_weight: np.ndarray = None
    name: str = field(default="mesh", compare=False)
    chart_kind: str = field(default="flat", compare=False)

    def __post_init__(self):
        tri = np.ascontiguousarray(self.triangles, dtype=np.int64)
        cor = np.ascontiguousarray(self.corners, dtype=float)
        ver = np.ascontiguousarray(self.vertices, dtype=float)
        if tri.ndim != 2 or tri.shape[1] != 3:
            raise MeshError("triangles must have shape (T, 3)")
        if cor.shape != (tri.shape[0], 3, 2):
            raise MeshError("corners must have shape (T, 3, 2)")
        w = self.chart_weight
        w = np.ones(tri.shape[0]) if w is None else np.asarray(w, dtype=float)
        if w.shape != (tri.shape[0],) or np.any(w <= 0):
            raise MeshError("chart_weight must be positive, one per triangle")
        loops = tuple(np.asarray(lp, dtype=np.int64) for lp in self.boundary_loops)
        cones = tuple(sorted(self.cone_points, key=lambda c: c.vertex))
        for arr in (tri, cor, ver, w, *loops):
            arr.setflags(write=False)
        object.__setattr__(self, "triangles", tri)
        object.__setattr__(self, "corners", cor)
        object.__setattr__(self, "vertices", ver)
        object.__setattr__(self, "chart_weight", w)
        object.__setattr__(self, "boundary_loops", loops)
        object.__setattr__(self, "cone_points", cones)

    # -- sizes -----------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def is_closed(self) -> bool:
        return len(self.boundary_loops) == 0

    # -- combinatorics ---------------------------------------------------
    @cached_property
    def half_edges(self) -> np.ndarray:
        """Directed edges (T*3, 2): row 3t+i is corner i -> corner i+1 of t."""
        t = self.triangles
        return np.stack([t, np.roll(t, -1, axis=1)], axis=2).reshape(-1, 2)

    @cached_property
    def _twin(self) -> np.ndarray:
        he = self.half_edges
        n = self.n_vertices
        key = he[:, 0] * n + he[:, 1]
        rkey = he[:, 1] * n + he[:, 0]
        order = np.argsort(key, kind="stable")
        sk = key[order]
        if np.any(sk[1:] == sk[:-1]):
            raise MeshError("a directed edge is used twice: inconsistent orientation")
        pos = np.searchsorted(sk, rkey)
        pos = np.minimum(pos, len(sk) - 1)
        found = sk[pos] == rkey
        return np.where(found, order[pos], -1)

    def twin(self, half_edge: int) -> int:
        """Index of the opposite half-edge, or -1 on the boundary."""
        return int(self._twin[half_edge])

    @cached_property
    def edges(self) -> np.ndarray:
        """Undirected edges (E, 2), sorted lexicographically."""
        he = np.sort(self.half_edges, axis=1)
        return np.unique(he, axis=0)

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_triangles

    @cached_property
    def vertex_triangles(self) -> list:
        out = [[] for _ in range(self.n_vertices)]
        for t, tri in enumerate(self.triangles):
            for v in tri:
                out[v].append(t)
        return out

    def cone_order(self, vertex: int) -> int:
        for c in self.cone_points:
            if c.vertex == vertex:
                return c.order
        return 1

    # -- geometry in chart coordinates -----------------------------------
    @cached_property
    def edge_vectors(self) -> np.ndarray:
        """(T, 2, 2) with columns corner1 - corner0 and corner2 - corner0."""
        c = self.corners
        return np.stack([c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]], axis=2)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.det(self.edge_vectors)

    def chart_area(self) -> float:
        return float(np.sum(self.chart_weight * self.signed_areas))

    def edge_lengths(self) -> np.ndarray:
        """(T, 3) chart lengths of the edges corner i -> corner i+1."""
        c = self.corners
        return np.linalg.norm(np.roll(c, -1, axis=1) - c, axis=2)

    def max_edge_length(self) -> float:
        return float(self.edge_lengths().max())

    def corner_angles(self) -> np.ndarray:
        """(T, 3) interior chart angles at each corner."""
        c = self.corners
        a = np.roll(c, -1, axis=1) - c
        b = np.roll(c, 1, axis=1) - c
        cross = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
        dot = np.sum(a * b, axis=2)
        return np.arctan2(cross, dot)

    def angle_sum(self, vertex: int) -> float:
        ang = self.corner_angles()
        total = 0.0
        for t in self.vertex_triangles[vertex]:
            i = int(np.flatnonzero(self.triangles[t] == vertex)[0])
            total += ang[t, i]
        return total

    def incident_edge_lengths(self, vertex: int) -> np.ndarray:
        out = []
        for t in self.vertex_triangles[vertex]:
            i = int(np.flatnonzero(self.triangles[t] == vertex)[0])
            c = self.corners[t]
            out.append(np.linalg.norm(c[(i + 1) % 3] - c[i]))
            out.append(np.linalg.norm(c[(i + 2) % 3] - c[i]))
        return np.array(out)

    # -- invariants ------------------------------------------------------
    def boundary_half_edges(self) -> np.ndarray:
        return np.flatnonzero(self._twin < 0)

    def validate(self, cone_tol: float = 1e-8) -> None:
        """Check every structural invariant; raise MeshError on failure."""
        if np.any(self.signed_areas <= 0):
            bad = int(np.flatnonzero(self.signed_areas <= 0)[0])
            raise MeshError(f"triangle {bad} has non-positive signed area")
        if np.any(self.triangles < 0) or np.any(self.triangles >= self.n_vertices):
            raise MeshError("triangle references a missing vertex")
        if np.any(self.triangles[:, 0] == self.triangles[:, 1]) or np.any(
            self.triangles[:, 1] == self.triangles[:, 2]
        ) or np.any(self.triangles[:, 0] == self.triangles[:, 2]):
            raise MeshError("degenerate triangle with a repeated vertex")
        _ = self._twin  # raises on duplicated directed edges
        self._check_edge_lengths()
        bnd = self.boundary_half_edges()
        he = self.half_edges
        bset = {(int(a), int(b)) for a, b in he[bnd]}
        lset = set()
        for lp in self.boundary_loops:
            for a, b in zip(lp, np.roll(lp, -1)):
                lset.add((int(a), int(b)))
        if bset != lset:
            raise MeshError("boundary_loops do not match the boundary edges")
        on_bnd = {int(v) for lp in self.boundary_loops for v in lp}
        for c in self.cone_points:
            if c.vertex in on_bnd:
                raise MeshError(f"cone point {c.vertex} lies on a boundary loop")
            s = self.angle_sum(c.vertex)
            if abs(s - 2 * np.pi / c.order) > cone_tol:
                raise MeshError(
                    f"cone point {c.vertex}: angle sum {s:.12g} != 2π/{c.order}"
                )
        used = np.zeros(self.n_vertices, bool)
        used[self.triangles.ravel()] = True
        if not used.all():
            raise MeshError("mesh has isolated vertices")
        if self._components() != 1:
            raise MeshError("mesh is not connected")

    def _check_edge_lengths(self, rtol: float = 1e-9) -> None:
        lengths = self.edge_lengths().ravel()
        tw = self._twin
        inner = tw >= 0
        a = lengths[inner]
        b = lengths[tw[inner]]
        if np.any(np.abs(a - b) > rtol * np.maximum(a, b)):
            raise MeshError("neighbouring charts disagree on a shared edge length")

    def _components(self) -> int:
        n = self.n_triangles
        tw = self._twin
        seen = np.zeros(n, bool)
        comps = 0
        for s in range(n):
            if seen[s]:
                continue
            comps += 1
            seen[s] = True
            queue = deque([s])
            while queue:
                t = queue.popleft()
                for h in range(3 * t, 3 * t + 3):
                    o = tw[h]
                    if o >= 0 and not seen[o // 3]:
                        seen[o // 3] = True
                        queue.append(o // 3)
        return comps

    def orientation_consistent(self) -> bool:
        """Every interior edge is traversed once in each direction."""
        try:
            tw = self._twin
        except MeshError:
            return False
        inner = tw >= 0
        return bool(np.all(tw[tw[inner]] == np.flatnonzero(inner)))

    def content_hash(self) -> str:
        """Deterministic digest of the mesh data (hex)."""
        import hashlib

        h = hashlib.sha256()
        for arr in (self.vertices, self.triangles, self.corners, self.chart_weight):
            h.update(np.ascontiguousarray(arr).tobytes())
        for c in self.cone_points:
            h.update(f"c{c.vertex}:{c.order};".encode())
        for lp in self.boundary_loops:
            h.update(b"L" + np.ascontiguousarray(lp).tobytes())
        return h.hexdigest()


@dataclass
class Development:
    """Triangles of a neighbourhood unfolded into one planar chart."""

    tri_pos: np.ndarray  # (T, 3, 2), NaN where unplaced
    placed: np.ndarray  # (T,) bool
    vertex_pos: np.ndarray  # (V, 2), first placement, NaN where unplaced
    order: list  # triangles in placement order

    @property
    def distance(self) -> np.ndarray:
        return np.linalg.norm(self.vertex_pos, axis=1)


def _rigid_map(src_a, src_b, dst_a, dst_b):
    """Rotation R and translation s with R @ src + s taking a->a, b->b."""
    u = src_b - src_a
    w = dst_b - dst_a
    ang = np.arctan2(w[1], w[0]) - np.arctan2(u[1], u[0])
    c, s = np.cos(ang), np.sin(ang)
    rot = np.array([[c, -s], [s, c]])
    return rot, dst_a - rot @ src_a


def develop(mesh: OrbiMesh, center: int | None = None, *, root: int | None = None,
            origin=None, radius: float = np.inf) -> Development:
    """Unfold the triangles around a point into a single flat chart.

    Starting from a root triangle, neighbours are placed across shared
    edges by rigid motions of their own chart coordinates.  Triangles are
    expanded while any of their vertices lies within ``radius`` of the
    origin.  On a flat neighbourhood free of cone points the result is an
    isometric chart; around a cone point placements agree up to rotation
    about the origin, so distances remain exact.
    """
    if center is None and root is None:
        raise MeshError("develop needs a center vertex or a root triangle")
    if root is None:
        inc = mesh.vertex_triangles[center]
        if not inc:
            raise MeshError(f"vertex {center} has no triangles")
        root = min(inc)
        i = int(np.flatnonzero(mesh.triangles[root] == center)[0])
        origin = mesh.corners[root, i]
    origin = np.zeros(2) if origin is None else np.asarray(origin, float)
    T = mesh.n_triangles
    tri_pos = np.full((T, 3, 2), np.nan)
    placed = np.zeros(T, bool)
    vpos = np.full((mesh.n_vertices, 2), np.nan)
    order = []
    # nearest-first: a triangle is placed from whichever neighbour reaches
    # it closest to the origin, so placements never wind around a cone
    # point while a direct route exists
    heap = [(0.0, 0, root, mesh.corners[root] - origin)]
    count = 1
    tw = mesh._twin
    tris = mesh.triangles
    while heap:
        _, _, t, pos = heapq.heappop(heap)
        if placed[t]:
            continue
        tri_pos[t] = pos
        placed[t] = True
        order.append(t)
        for i, v in enumerate(tris[t]):
            if np.isnan(vpos[v, 0]):
                vpos[v] = pos[i]
        if np.min(np.linalg.norm(pos, axis=1)) > radius:
            continue
        for i in range(3):
            o = tw[3 * t + i]
            if o < 0:
                continue
            nt, j = divmod(int(o), 3)
            if placed[nt]:
                continue
            # half-edge o runs corner j -> j+1 of nt, i.e. b -> a of t
            pa = pos[i]
            pb = pos[(i + 1) % 3]
            qa = mesh.corners[nt, (j + 1) % 3]
            qb = mesh.corners[nt, j]
            rot, shift = _rigid_map(qa, qb, pa, pb)
            npos = mesh.corners[nt] @ rot.T + shift
            heapq.heappush(heap, (float(np.min(np.linalg.norm(npos, axis=1))), count, nt, npos))
            count += 1
    return Development(tri_pos, placed, vpos, order)
