import numpy as np
import pytest

from orbicollapse.assembly import assemble
from orbicollapse.csum import ConnectedSumConfig, build_connected_sum
from orbicollapse.eigen import solve_smallest
from orbicollapse.mesh import build_flat_torus, build_pillowcase
from orbicollapse.metric import euclidean

TAU = 2 * np.pi


def nearest_vertex(mesh, point):
    return int(np.argmin(np.linalg.norm(mesh.vertices - np.asarray(point), axis=1)))


@pytest.fixture(scope="session")
def torus():
    mesh = build_flat_torus(TAU, 0.1)
    return mesh, euclidean(mesh)


@pytest.fixture(scope="session")
def coarse_torus():
    mesh = build_flat_torus(TAU, 0.2)
    return mesh, euclidean(mesh)


@pytest.fixture(scope="session")
def pillowcase():
    mesh = build_pillowcase(TAU, 0.2, grading=0.5)
    return mesh, euclidean(mesh)


@pytest.fixture(scope="session")
def gluing_points(torus, pillowcase):
    return nearest_vertex(torus[0], (np.pi, np.pi)), nearest_vertex(pillowcase[0], (np.pi / 2, np.pi / 2))


@pytest.fixture(scope="session")
def torus_spectrum(torus):
    return solve_smallest(assemble(*torus), 6)


@pytest.fixture(scope="session")
def canonical(torus, pillowcase, gluing_points):
    """Glued complexes of the canonical pair, cached per (ε, k_boundary)."""
    cache = {}

    def get(eps, k_boundary=32):
        key = (eps, k_boundary)
        if key not in cache:
            p1, p2 = gluing_points
            cache[key] = build_connected_sum(torus, pillowcase,
                                             ConnectedSumConfig(eps, p1, p2, k_boundary))
        return cache[key]

    return get
