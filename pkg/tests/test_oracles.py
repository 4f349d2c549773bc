"""Reference spectra, checked against brute-force counting first."""
import itertools

import numpy as np
import pytest

from orbicollapse.analysis import reference_spectrum

TAU = 2 * np.pi


def brute_pillowcase(count, reach=8):
    """Dimension of the (-1)-invariant part of each torus eigenspace, by orbits."""
    orbits = {}
    for j, k in itertools.product(range(-reach, reach + 1), repeat=2):
        key = min((j, k), (-j, -k))
        orbits.setdefault(j * j + k * k, set()).add(key)
    values = []
    for n in sorted(orbits):
        values += [n] * len(orbits[n])
    return np.array(values[:count], dtype=float)


def test_pillowcase_matches_brute_force_orbits():
    np.testing.assert_array_equal(reference_spectrum(("pillowcase", TAU), 40), brute_pillowcase(40))


def test_pillowcase_first_values():
    np.testing.assert_array_equal(reference_spectrum(("pillowcase", TAU), 11),
                                  [0, 1, 1, 2, 2, 4, 4, 5, 5, 5, 5])


def test_torus_lattice_counts():
    lam = reference_spectrum(("torus", TAU), 22)
    np.testing.assert_array_equal(lam, [0] + [1] * 4 + [2] * 4 + [4] * 4 + [5] * 8 + [8])


def test_torus_side_scaling():
    np.testing.assert_allclose(reference_spectrum(("torus", 1.0), 5),
                               (2 * np.pi) ** 2 * np.array([0, 1, 1, 1, 1]))


def test_sphere_multiplicities():
    lam = reference_spectrum(("sphere", 1.0), 16)
    np.testing.assert_array_equal(lam, [0] + [2] * 3 + [6] * 5 + [12] * 7)


@pytest.mark.parametrize("m", [2, 3, 5])
def test_spindle_counts_invariant_harmonics(m):
    lam = reference_spectrum(("spindle", m, 1.0), 30)
    values, counts = np.unique(lam[lam < lam[-1]], return_counts=True)
    for v, c in zip(values, counts):
        l = int(round((-1 + np.sqrt(1 + 4 * v)) / 2))
        assert c == 2 * (l // m) + 1


def test_disc_dirichlet_first_zero():
    lam = reference_spectrum(("disc_dirichlet", 1.0), 3)
    np.testing.assert_allclose(lam, [2.404825557695773 ** 2] + [3.831705970207512 ** 2] * 2)


def test_unknown_model():
    with pytest.raises(ValueError):
        reference_spectrum(("klein", 1.0), 3)
