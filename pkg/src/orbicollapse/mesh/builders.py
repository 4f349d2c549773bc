"""Model orbifold meshes: flat torus, pillowcase, spindles, flat discs."""
from __future__ import annotations

import numpy as np

from ._rings import Node, fan, orient, zipper
from .core import ConePoint, MeshError, OrbiMesh
from .surgery import _trace_loop, grade_toward


def _grid_size(side, h, multiple):
    if not side > 0:
        raise MeshError(f"side must be positive, got {side}")
    if not 0 < h < side / 4:
        raise MeshError(f"target edge length h={h} must lie in (0, side/4) for side={side}")
    # diagonal of a grid square is sqrt(2) * side / N and must stay <= 1.5 h
    n = int(np.ceil(np.sqrt(2) * side / (1.5 * h)))
    return max(multiple, multiple * int(np.ceil(n / multiple)))


def _grid(n, step):
    """Lower and upper triangles of an n-by-n periodic grid."""
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = i.ravel(), j.ravel()
    ij = np.stack([i, j], axis=1)
    lower = np.stack([ij, ij + [1, 0], ij + [1, 1]], axis=1)
    upper = np.stack([ij, ij + [1, 1], ij + [0, 1]], axis=1)
    return lower, upper


def build_flat_torus(side: float, h: float) -> OrbiMesh:
    """Square flat torus of the given side from a structured periodic grid.

    Every grid square is split along its diagonal; the diagonal, the
    longest edge, has length ``sqrt(2) * side / N <= 1.5 h``.
    """
    n = _grid_size(side, h, 2)
    step = side / n
    lower, upper = _grid(n, step)
    lat = np.concatenate([lower, upper])  # (T, 3, 2) lattice coordinates
    vid = np.mod(lat[..., 0], n) + n * np.mod(lat[..., 1], n)
    iv, jv = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    vertices = np.zeros((n * n, 2))
    vertices[(iv + n * jv).ravel()] = step * np.column_stack([iv.ravel(), jv.ravel()])
    return OrbiMesh(vertices, vid, step * lat.astype(float), name="torus")


def build_pillowcase(side: float, h: float, grading: float = 1.0) -> OrbiMesh:
    """Flat pillowcase: the torus of the given side modulo x -> -x.

    Four cone points of order 2 sit at the half-lattice points.  With
    ``grading < 1`` the mesh is refined geometrically toward each of them.
    """
    if not 0 < grading <= 1:
        raise MeshError(f"grading must lie in (0, 1], got {grading}")
    n = _grid_size(side, h, 4)
    step = side / n
    lower, _ = _grid(n, step)
    lat = lower  # one triangle per square is a fundamental domain for x -> -x

    def key(a, b):
        return np.mod(a, n) + n * np.mod(b, n)

    k1 = key(lat[..., 0], lat[..., 1])
    k2 = key(-lat[..., 0], -lat[..., 1])
    canon = np.minimum(k1, k2)
    uniq, vid = np.unique(canon, return_inverse=True)
    vid = vid.reshape(canon.shape)
    vertices = step * np.column_stack([uniq % n, uniq // n]).astype(float)
    half = n // 2
    cones = []
    for a, b in [(0, 0), (half, 0), (0, half), (half, half)]:
        v = int(np.searchsorted(uniq, key(a, b)))
        cones.append(ConePoint(v, 2))
    mesh = OrbiMesh(vertices, vid, step * lat.astype(float), tuple(cones), name="pillowcase")
    # surgery renumbers monotonically, so the i-th cone stays the i-th
    for i in range(len(cones) if grading < 1 else 0):
        mesh = grade_toward(mesh, mesh.cone_points[i].vertex, grading)
    return mesh


def build_spindle(m: int, h: float) -> OrbiMesh:
    """Spindle S²/Z_m (the round sphere for m = 1) in geodesic polar charts.

    Vertices sit on latitude rings; the northern half uses equidistant
    polar coordinates about the north pole, the southern half about the
    south pole, so every chart is ``chart_kind="polar"``.  The round
    metric is attached by :func:`orbicollapse.metric.round_sphere`.
    """
    if int(m) != m or m < 1:
        raise MeshError(f"spindle order must be a positive integer, got {m}")
    if not 0 < h < np.pi / 4:
        raise MeshError(f"target edge length h={h} must lie in (0, π/4)")
    m = int(m)
    period = 2 * np.pi / m
    n_rings = 2 * int(np.ceil(np.pi / (2 * h)))
    theta = np.pi * np.arange(n_rings + 1) / n_rings
    counts = [1] + [
        max(3, int(round(period * np.sin(t) / h))) for t in theta[1:-1]
    ] + [1]
    rings = []
    vid = 0
    vert = []
    for i, (t, c) in enumerate(zip(theta, counts)):
        phis = period * (np.arange(c) + 0.5 * (i % 2)) / c
        rings.append([Node(vid + j, float(t), float(f)) for j, f in enumerate(phis)])
        vert += [(t, f) for f in phis]
        vid += c
    triples = []
    south = []
    for i in range(n_rings):
        a, b = rings[i], rings[i + 1]
        if i == 0:
            new = fan(a[0], b, period)
        elif i == n_rings - 1:
            new = fan(b[0], a, period)
        else:
            new = zipper(b, a, period)  # larger colatitude is the outer ring
        triples += new
        south += [i >= n_rings // 2] * len(new)

    def chart(k):
        def coords(tri):
            out = []
            for n in tri:
                if south[k]:
                    rho, psi = np.pi - n.r, -n.phi
                else:
                    rho, psi = n.r, n.phi
                out.append([rho * np.cos(psi), rho * np.sin(psi)])
            return np.array(out)
        return coords

    tris = np.empty((len(triples), 3), dtype=np.int64)
    cor = np.empty((len(triples), 3, 2))
    for k, tri in enumerate(triples):
        tt, cc = orient([tri], chart(k))
        tris[k], cor[k] = tt[0], cc[0]
    cones = () if m == 1 else (ConePoint(0, m), ConePoint(vid - 1, m))
    return OrbiMesh(np.array(vert), tris, cor, cones, name=f"spindle{m}", chart_kind="polar")


def build_disc(radius: float, k_boundary: int, offset: float = 0.0) -> OrbiMesh:
    """Flat disc whose boundary circle carries ``k_boundary`` equal nodes.

    Boundary node ``j`` sits at angle ``offset + 2πj/k_boundary`` and the
    boundary loop lists the nodes in that order.
    """
    if not radius > 0 or k_boundary < 6:
        raise MeshError("disc needs a positive radius and at least 6 boundary nodes")
    k = int(k_boundary)
    levels = max(2, int(round(k / (2 * np.pi))))
    rings = []
    vid = 0
    vert = []
    for i in range(levels):
        frac = (levels - i) / levels
        c = k if i == 0 else max(6, int(round(k * frac)))
        phis = offset + 2 * np.pi * (np.arange(c) + (0.5 * (i % 2) if i else 0.0)) / c
        rings.append([Node(vid + j, radius * frac, float(f)) for j, f in enumerate(phis)])
        vert += [(radius * frac * np.cos(f), radius * frac * np.sin(f)) for f in phis]
        vid += c
    center = Node(vid, 0.0, 0.0)
    vert.append((0.0, 0.0))
    triples = []
    for a, b in zip(rings[:-1], rings[1:]):
        triples += zipper(a, b, 2 * np.pi)
    triples += fan(center, rings[-1], 2 * np.pi)
    tris, cor = orient(triples)
    loop = _trace_loop(tris, 0)
    if loop[1] != 1:
        raise MeshError("disc boundary orientation unexpected")
    return OrbiMesh(np.array(vert), tris, cor, (), (loop,), name="disc")
