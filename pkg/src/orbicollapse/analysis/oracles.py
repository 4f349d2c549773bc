"""Closed-form and counting spectra used as independent references."""
from __future__ import annotations

import numpy as np
from scipy.special import jn_zeros


def _lattice_values(count: int, max_norm: int | None = None):
    """Integer pairs (j, k) with j² + k² <= max_norm, grouped by norm."""
    n = max(4, count) if max_norm is None else max_norm
    reach = int(np.ceil(np.sqrt(n))) + 1
    j, k = np.meshgrid(np.arange(-reach, reach + 1), np.arange(-reach, reach + 1))
    norms = (j * j + k * k).ravel()
    return norms[norms <= n]


def _take(values, count, name):
    values = np.sort(np.asarray(values, dtype=float))
    if len(values) < count:
        raise RuntimeError(f"{name} oracle enumerated too few eigenvalues")
    return values[:count]


def torus_spectrum(side: float, count: int) -> np.ndarray:
    """Square flat torus R²/(side·Z²): (2π/side)²(j² + k²)."""
    norms = _lattice_values(count)
    return _take((2 * np.pi / side) ** 2 * norms, count, "torus")


def pillowcase_spectrum(side: float, count: int) -> np.ndarray:
    """Pillowcase T²/{±1}: the (-1)-invariant torus eigenfunctions.

    The eigenspace of j² + k² = N is spanned by e^{i(jx + ky)}; the
    involution pairs (j, k) with (-j, -k), fixing only (0, 0), so the
    invariant dimension is (#{(j, k)} + #fixed)/2.
    """
    norms = _lattice_values(2 * count)
    values = []
    for n in np.unique(norms):
        mult = int(np.count_nonzero(norms == n))
        fixed = 1 if n == 0 else 0
        values += [n] * ((mult + fixed) // 2)
    return _take((2 * np.pi / side) ** 2 * np.array(values), count, "pillowcase")


def spindle_spectrum(m: int, radius: float, count: int) -> np.ndarray:
    """S²/Z_m (rotation by 2π/m): l(l+1)/r² with #{|q| <= l : m | q} copies.

    The spherical harmonics Y_l^q invariant under the rotation are those
    with q divisible by m.
    """
    if m < 1:
        raise ValueError("cone order must be positive")
    values, l = [], 0
    while len(values) < count:
        mult = sum(1 for q in range(-l, l + 1) if q % m == 0)
        values += [l * (l + 1) / radius ** 2] * mult
        l += 1
    return np.array(values[:count], dtype=float)


def disc_dirichlet_spectrum(radius: float, count: int) -> np.ndarray:
    """Dirichlet disc: squared Bessel zeros j_{n,s}²/r², doubled for n >= 1."""
    values = []
    n_max = count + 2
    for n in range(n_max):
        z = jn_zeros(n, count)
        values += list(z ** 2) * (1 if n == 0 else 2)
    return _take(np.array(values) / radius ** 2, count, "disc")


def reference_spectrum(model, count: int) -> np.ndarray:
    """Ascending reference eigenvalues with multiplicity.

    Parameters
    ----------
    model : tuple
        ``("torus", L)``, ``("pillowcase", L)``, ``("sphere", r)``,
        ``("spindle", m, r)`` or ``("disc_dirichlet", r)``.
    count : int
    """
    name, *args = model if isinstance(model, (tuple, list)) else (model,)
    if name == "torus":
        return torus_spectrum(float(args[0]), count)
    if name == "pillowcase":
        return pillowcase_spectrum(float(args[0]), count)
    if name == "sphere":
        return spindle_spectrum(1, float(args[0]) if args else 1.0, count)
    if name == "spindle":
        return spindle_spectrum(int(args[0]), float(args[1]) if len(args) > 1 else 1.0, count)
    if name == "disc_dirichlet":
        return disc_dirichlet_spectrum(float(args[0]), count)
    raise ValueError(f"unknown oracle model {name!r}")
