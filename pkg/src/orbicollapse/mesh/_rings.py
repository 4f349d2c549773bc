"""Polar ring meshing: strips between closed angular rings, fans, discs."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Node(NamedTuple):
    vid: int
    r: float
    phi: float


def polar_xy(node):
    return np.array([node.r * np.cos(node.phi), node.r * np.sin(node.phi)])


def _area(p, q, r):
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def zipper(outer, inner, period, xy=polar_xy):
    """Triangulate the strip between two closed rings.

    Both rings are sequences of :class:`Node` sorted by ``phi`` inside a
    window of length ``period``; ``outer`` runs counter-clockwise around
    ``inner``.  At every step the front advances along whichever ring gives
    a positively oriented triangle, preferring the shorter new diagonal.
    Returns node triples whose phi values are unwrapped consistently.
    """
    a = list(outer)
    b = list(inner)
    na, nb = len(a), len(b)
    a0 = a[0].phi
    # start the inner ring at the node angularly nearest to a[0]
    d = np.abs(np.mod(np.array([n.phi for n in b]) - a0 + period / 2, period) - period / 2)
    j0 = int(np.argmin(d))
    bb = []
    for s in range(nb):
        n = b[(j0 + s) % nb]
        if s == 0:
            phi = a0 + np.mod(n.phi - a0 + period / 2, period) - period / 2
        else:
            phi = bb[-1].phi + np.mod(n.phi - bb[-1].phi, period)
        bb.append(n._replace(phi=phi))
    bb.append(bb[0]._replace(phi=bb[0].phi + period))
    aa = a + [a[0]._replace(phi=a0 + period)]
    pa = [xy(n) for n in aa]
    pb = [xy(n) for n in bb]
    tris = []
    i = j = 0
    while i < na or j < nb:
        if j == nb:
            adv_a = True
        elif i == na:
            adv_a = False
        else:
            ok_a = _area(pa[i], pa[i + 1], pb[j]) > 0
            ok_b = _area(pa[i], pb[j + 1], pb[j]) > 0
            if ok_a != ok_b:
                adv_a = ok_a
            else:
                adv_a = np.linalg.norm(pa[i + 1] - pb[j]) <= np.linalg.norm(pa[i] - pb[j + 1])
        if adv_a:
            tris.append((aa[i], aa[i + 1], bb[j]))
            i += 1
        else:
            tris.append((aa[i], bb[j + 1], bb[j]))
            j += 1
    return tris


def fan(center, ring, period):
    """Triangles joining ``center`` to consecutive nodes of a closed ring."""
    rr = list(ring) + [ring[0]._replace(phi=ring[0].phi + period)]
    return [(center, rr[i], rr[i + 1]) for i in range(len(ring))]


def polar_corners(triple):
    return np.array([polar_xy(n) for n in triple])


def orient(triples, coords_fn=polar_corners):
    """Vertex triples and chart corners, flipped to positive orientation."""
    tris = np.empty((len(triples), 3), dtype=np.int64)
    cor = np.empty((len(triples), 3, 2))
    for k, tri in enumerate(triples):
        c = coords_fn(tri)
        e1, e2 = c[1] - c[0], c[2] - c[0]
        area = e1[0] * e2[1] - e1[1] * e2[0]
        ids = [n.vid for n in tri]
        if area < 0:
            ids = [ids[0], ids[2], ids[1]]
            c = c[[0, 2, 1]]
        tris[k] = ids
        cor[k] = c
    return tris, cor


def ring_counts(n_outer, n_inner, steps):
    """Log-interpolated node counts for rings 1..steps-1."""
    out = []
    for i in range(1, steps):
        tau = 1.0 - i / steps
        out.append(max(3, int(round(n_outer ** tau * n_inner ** (1.0 - tau)))))
    return out
