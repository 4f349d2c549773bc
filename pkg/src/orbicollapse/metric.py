"""Piecewise-constant Riemannian metrics on orbifold meshes.

A :class:`MetricField` stores one symmetric positive-definite 2x2 tensor
per triangle, expressed in that triangle's chart coordinates.  Smooth
metrics are represented in Regge form: the tensor of every triangle is the
unique one reproducing the metric lengths of its three edges, so
neighbouring triangles agree on shared edges exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh.core import MeshError, OrbiMesh, develop

SMOOTH = "smooth"
PIECEWISE = "piecewise-across-interface"


class MetricError(ValueError):
    """Raised for invalid metric data or operations."""


@dataclass(frozen=True, eq=False)
class MetricField:
    """Per-triangle SPD tensors on a mesh.

    Parameters
    ----------
    mesh : OrbiMesh
    tensors : ndarray of shape (T, 2, 2)
        Symmetrized on construction.
    tag : {"smooth", "piecewise-across-interface"}
    """

    mesh: OrbiMesh
    tensors: np.ndarray
    tag: str = SMOOTH

    def __post_init__(self):
        g = np.array(self.tensors, dtype=float)
        if g.shape != (self.mesh.n_triangles, 2, 2):
            raise MetricError("tensors must have shape (T, 2, 2)")
        if self.tag not in (SMOOTH, PIECEWISE):
            raise MetricError(f"unknown smoothness tag {self.tag!r}")
        g = 0.5 * (g + np.swapaxes(g, 1, 2))
        g.setflags(write=False)
        object.__setattr__(self, "tensors", g)

    def edge_lengths(self) -> np.ndarray:
        """(T, 3) metric lengths of the edges corner i -> corner i+1."""
        c = self.mesh.corners
        e = np.roll(c, -1, axis=1) - c
        return np.sqrt(np.einsum("tia,tab,tib->ti", e, self.tensors, e))

    def areas(self) -> np.ndarray:
        """Metric area of each triangle, chart weight included."""
        det = self.tensors[:, 0, 0] * self.tensors[:, 1, 1] - self.tensors[:, 0, 1] ** 2
        return self.mesh.chart_weight * self.mesh.signed_areas * np.sqrt(det)

    def area(self) -> float:
        return float(np.sum(self.areas()))

    def min_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.tensors)[:, 0]

    def continuity_defect(self) -> float:
        """Largest relative disagreement of shared edge lengths."""
        lengths = self.edge_lengths().ravel()
        tw = self.mesh._twin
        inner = tw >= 0
        a, b = lengths[inner], lengths[tw[inner]]
        if a.size == 0:
            return 0.0
        return float(np.max(np.abs(a - b) / np.maximum(a, b)))

    def validate(self, rtol: float = 1e-8) -> None:
        if np.any(self.min_eigenvalues() <= 0):
            bad = int(np.argmin(self.min_eigenvalues()))
            raise MetricError(f"tensor on triangle {bad} is not positive definite")
        if self.tag == SMOOTH and self.continuity_defect() > rtol:
            raise MetricError(
                f"smooth-tagged field has edge-length jump {self.continuity_defect():.3g}"
            )

    def with_tensors(self, tensors, tag=None) -> "MetricField":
        return MetricField(self.mesh, tensors, self.tag if tag is None else tag)


# -- construction --------------------------------------------------------
def euclidean(mesh: OrbiMesh) -> MetricField:
    """The chart metric: identity tensor on every triangle."""
    return MetricField(mesh, np.broadcast_to(np.eye(2), (mesh.n_triangles, 2, 2)))


def from_edge_lengths(mesh: OrbiMesh, lengths, tag: str = SMOOTH) -> MetricField:
    """Tensors reproducing prescribed (T, 3) edge lengths (Regge metric).

    Raises
    ------
    MetricError
        If some triangle's lengths violate the strict triangle inequality.
    """
    lengths = np.asarray(lengths, dtype=float)
    c = mesh.corners
    e = np.roll(c, -1, axis=1) - c
    rows = np.stack([e[..., 0] ** 2, 2 * e[..., 0] * e[..., 1], e[..., 1] ** 2], axis=2)
    abc = np.linalg.solve(rows, (lengths ** 2)[..., None])[..., 0]
    g = np.empty((mesh.n_triangles, 2, 2))
    g[:, 0, 0], g[:, 0, 1], g[:, 1, 0], g[:, 1, 1] = abc[:, 0], abc[:, 1], abc[:, 1], abc[:, 2]
    det = abc[:, 0] * abc[:, 2] - abc[:, 1] ** 2
    if np.any(det <= 0) or np.any(abc[:, 0] <= 0):
        bad = int(np.flatnonzero((det <= 0) | (abc[:, 0] <= 0))[0])
        raise MetricError(f"edge lengths of triangle {bad} violate the triangle inequality")
    return MetricField(mesh, g, tag)


def _polar_geodesic(x1, x2):
    """Sphere distance between points given in geodesic polar charts."""
    r1 = np.linalg.norm(x1, axis=-1)
    r2 = np.linalg.norm(x2, axis=-1)
    cross = x1[..., 0] * x2[..., 1] - x1[..., 1] * x2[..., 0]
    dpsi = np.abs(np.arctan2(cross, np.sum(x1 * x2, axis=-1)))
    hav = np.sin((r1 - r2) / 2) ** 2 + np.sin(r1) * np.sin(r2) * np.sin(dpsi / 2) ** 2
    return 2 * np.arcsin(np.sqrt(np.clip(hav, 0.0, 1.0)))


def round_sphere(mesh: OrbiMesh, radius: float = 1.0) -> MetricField:
    """Round metric of the given radius on a mesh with polar charts.

    Each chart is read as geodesic polar coordinates about its origin on the
    unit sphere; edges get their exact great-circle lengths.
    """
    if mesh.chart_kind != "polar":
        raise MetricError("round_sphere needs a mesh with geodesic polar charts")
    if not radius > 0:
        raise MetricError(f"radius must be positive, got {radius}")
    c = mesh.corners
    lengths = radius * _polar_geodesic(c, np.roll(c, -1, axis=1))
    return from_edge_lengths(mesh, lengths)


def scale(f: MetricField, c: float) -> MetricField:
    """The metric ``c * f`` (for the collapse, ``c = ε²``)."""
    if not c > 0:
        raise MetricError(f"scale factor must be positive, got {c}")
    return f.with_tensors(c * f.tensors)


# -- the ρ'' distance --------------------------------------------------------
@dataclass(frozen=True)
class MetricDistanceReport:
    """sup over triangles of max |ln λ| over the eigenvalues λ of f1⁻¹ f2."""

    rho_pp: float
    argmax: int
    per_triangle: np.ndarray = field(repr=False)


def _log_eigs(a, b):
    """Generalized eigenvalues of the 2x2 pencils (b, a) in log form."""
    ell = np.linalg.cholesky(a)
    linv = np.linalg.inv(ell)
    cmat = linv @ b @ np.swapaxes(linv, 1, 2)
    cmat = 0.5 * (cmat + np.swapaxes(cmat, 1, 2))
    return np.log(np.linalg.eigvalsh(cmat))


def rho_double_prime(f1: MetricField, f2: MetricField) -> MetricDistanceReport:
    """Pointwise log-comparison distance between two metrics on one mesh."""
    if f1.mesh is not f2.mesh and f1.mesh.n_triangles != f2.mesh.n_triangles:
        raise MetricError("metrics live on different meshes")
    per = np.max(np.abs(_log_eigs(f1.tensors, f2.tensors)), axis=1)
    i = int(np.argmax(per))
    return MetricDistanceReport(float(per[i]), i, per)


# -- local modifications ---------------------------------------------------
def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (10 - 15 * s + 6 * s * s)


def flatten_near(f: MetricField, vertex: int, r_in: float, r_out: float) -> MetricField:
    """Make ``f`` Euclidean (in chart coordinates) near a vertex.

    Edge lengths are blended geometrically between the chart lengths and
    the lengths of ``f``: pure chart inside ``r_in``, untouched beyond
    ``r_out``.  The blend weight of an edge uses the mean of its endpoint
    distances, measured in the chart developed about the vertex.
    """
    if not 0 < r_in < r_out:
        raise MetricError("flatten_near needs 0 < r_in < r_out")
    mesh = f.mesh
    dev = develop(mesh, vertex, radius=r_out)
    for cp in mesh.cone_points:
        d = np.linalg.norm(dev.vertex_pos[cp.vertex])
        if cp.vertex != vertex and not np.isnan(d) and r_in < d < r_out:
            raise MetricError(f"cone point {cp.vertex} lies in the blending annulus")
    # one distance per vertex keeps shared edges consistent
    vd = np.linalg.norm(dev.vertex_pos, axis=1)
    vd = np.where(np.isnan(vd), np.inf, vd)
    tri = mesh.triangles
    dist = 0.5 * (vd[tri] + vd[np.roll(tri, -1, axis=1)])
    w = _smoothstep((dist - r_in) / (r_out - r_in))
    c = mesh.corners
    flat = np.linalg.norm(np.roll(c, -1, axis=1) - c, axis=2)
    cur = f.edge_lengths()
    lengths = flat ** (1 - w) * cur ** w
    touched = np.any(w < 1, axis=1)
    try:
        new = from_edge_lengths(mesh, lengths, f.tag).tensors
    except MetricError as err:
        raise MetricError(f"blending lost positive-definiteness: {err}") from None
    g = np.where(touched[:, None, None], new, f.tensors)
    return f.with_tensors(g)


def is_flat_on(f: MetricField, triangles, tol: float = 1e-10) -> bool:
    """True when every listed tensor equals the identity within ``tol``."""
    t = np.asarray(triangles, dtype=np.int64)
    if t.size == 0:
        return True
    return bool(np.max(np.abs(f.tensors[t] - np.eye(2))) < tol)


@dataclass(frozen=True)
class CollarFrame:
    """Flat polar coordinates about both glued circles.

    Attributes
    ----------
    epsilon : float
        Radius of the glued circle in metric units.
    triangles : ndarray of shape (n,)
        Triangles of the glued mesh covered by the frame.
    positions : ndarray of shape (n, 3, 2)
        Corner positions relative to the circle center of their own side,
        in metric units; the metric there is Euclidean.
    interface_triangles : ndarray
        Triangles with an edge on the glued circle.
    """

    epsilon: float
    triangles: np.ndarray
    positions: np.ndarray
    interface_triangles: np.ndarray
    reach: float


def smoothed_abs(t, width):
    """|t| convolved with a compact C² kernel of half-width ``width``."""
    t = np.abs(np.asarray(t, dtype=float))
    if width <= 0:
        return t
    s = np.minimum(t / width, 1.0)
    p = (35 / 128 + 35 / 32 * s ** 2 - 35 / 64 * s ** 4 + 7 / 32 * s ** 6
         - 5 / 128 * s ** 8)
    return np.where(t >= width, t, width * p)


def mollify_across_interface(f: MetricField, collar: CollarFrame, width: float) -> MetricField:
    """Smooth the crease of a glued metric along its gluing circle.

    Near the circle the glued metric reads ``dt² + (ε + |t|)² dθ²`` in
    collar coordinates (``t`` the signed distance to the circle).  The kink
    of ``|t|`` is replaced by its convolution with a compact kernel of
    half-width ``width``; edges farther than ``width`` from the circle keep
    their lengths, the rest take lengths of the smoothed metric, and
    tensors are rebuilt from edge lengths.
    """
    if width < 0:
        raise MetricError("width must be nonnegative")
    if width == 0:
        return f.with_tensors(f.tensors, SMOOTH)
    if width > collar.reach:
        raise MetricError(f"width {width} exceeds the flat collar ({collar.reach:.3g})")
    mesh = f.mesh
    lengths = f.edge_lengths()
    iface = mesh.corners[collar.interface_triangles]
    h = float(np.max(np.linalg.norm(np.roll(iface, -1, axis=1) - iface, axis=2)))
    if width < h:
        raise MetricError(f"width {width} is below the interface edge length {h:.3g}")
    if not is_flat_on(f, collar.triangles):
        raise MetricError("metric is not flat on the collar")
    p = collar.positions
    e = np.roll(p, -1, axis=1) - p
    mid = 0.5 * (p + np.roll(p, -1, axis=1))
    r = np.linalg.norm(mid, axis=2)
    u = mid / r[..., None]
    dt = np.sum(u * e, axis=2)
    dth = (u[..., 0] * e[..., 1] - u[..., 1] * e[..., 0]) / r
    eps = collar.epsilon
    sw = eps + smoothed_abs(r - eps, width)
    ratio = (dt ** 2 + sw ** 2 * dth ** 2) / (dt ** 2 + r ** 2 * dth ** 2)
    sub = lengths[collar.triangles] * np.sqrt(ratio)
    lengths = lengths.copy()
    lengths[collar.triangles] = sub
    changed = np.zeros(mesh.n_triangles, bool)
    changed[collar.triangles] = np.any(np.abs(r - eps) < width, axis=1)
    new = from_edge_lengths(mesh, lengths, SMOOTH).tensors
    g = np.where(changed[:, None, None], new, f.tensors)
    return f.with_tensors(g, SMOOTH)


# -- serialization ---------------------------------------------------------
def metric_section(f: MetricField) -> tuple:
    """``("METRIC", rows)`` with rows ``triangle a11 a12 a22``."""
    fm = "{:.17g}".format
    rows = [[str(i), fm(g[0, 0]), fm(g[0, 1]), fm(g[1, 1])] for i, g in enumerate(f.tensors)]
    return ("METRIC", rows)


def metric_from_section(mesh: OrbiMesh, rows, tag: str = SMOOTH) -> MetricField:
    if len(rows) != mesh.n_triangles:
        raise MeshError("METRIC section does not match the triangle count")
    g = np.zeros((mesh.n_triangles, 2, 2))
    for r in rows:
        i = int(r[0])
        a, b, c = float(r[1]), float(r[2]), float(r[3])
        g[i] = [[a, b], [b, c]]
    return MetricField(mesh, g, tag)
