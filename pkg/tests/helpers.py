"""Shared test utilities.

Deliberately independent of the library under test: finite differences,
characteristic-polynomial coefficients via principal minors, and a
hand-rolled polynomial root finder. These act as oracles, so they must not
lean on the same LAPACK eigensolver paths the library uses.
"""

from __future__ import annotations

import itertools

import numpy as np


def central_difference_gradient(func, point, step=1e-6):
    """Central-difference gradient of a scalar function on the last axis."""
    point = np.asarray(point, dtype=float)
    grad = np.zeros_like(point)
    for idx in np.ndindex(point.shape):
        bump = np.zeros_like(point)
        bump[idx] = step
        grad[idx] = (func(point + bump) - func(point - bump)) / (2.0 * step)
    return grad


def central_difference_jacobian(func, point, step=1e-6):
    """Central-difference Jacobian of a vector function of a vector."""
    point = np.asarray(point, dtype=float)
    base = np.asarray(func(point), dtype=float)
    jac = np.zeros((base.size, point.size))
    for j in range(point.size):
        bump = np.zeros_like(point)
        bump.flat[j] = step
        hi = np.asarray(func(point + bump), dtype=float)
        lo = np.asarray(func(point - bump), dtype=float)
        jac[:, j] = (hi - lo).ravel() / (2.0 * step)
    return jac


def _determinant_by_elimination(matrix):
    """Determinant via plain Gaussian elimination with partial pivoting.

    Kept independent of numpy.linalg on purpose; fine for the small
    matrices the oracle handles.
    """
    a = np.array(matrix, dtype=complex)
    size = a.shape[0]
    if size == 0:
        return 1.0 + 0.0j
    det = 1.0 + 0.0j
    for col in range(size):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot, col]) == 0.0:
            return 0.0 + 0.0j
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            det = -det
        det *= a[col, col]
        a[col + 1:, col:] = a[col + 1:, col:] - np.outer(
            a[col + 1:, col] / a[col, col], a[col, col:]
        )
    return det


def characteristic_polynomial(matrix):
    """Coefficients of det(lambda I - A), highest power first.

    coefficient of lambda^(n-k) is (-1)^k * (sum of k x k principal minors).
    Exponential in n, so only used for the small AC-sized instances.
    """
    a = np.asarray(matrix, dtype=float)
    size = a.shape[0]
    coeffs = np.zeros(size + 1, dtype=complex)
    coeffs[0] = 1.0
    for k in range(1, size + 1):
        minor_sum = 0.0 + 0.0j
        for rows in itertools.combinations(range(size), k):
            sub = a[np.ix_(rows, rows)]
            minor_sum += _determinant_by_elimination(sub)
        coeffs[k] = (-1.0) ** k * minor_sum
    return coeffs


def _polyval(coeffs, x):
    result = coeffs[0]
    for c in coeffs[1:]:
        result = result * x + c
    return result


def durand_kerner_roots(coeffs, max_iter=2000, tol=1e-14):
    """All complex roots of a polynomial by Durand-Kerner iteration.

    coeffs are highest power first, leading coefficient nonzero.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    coeffs = coeffs / coeffs[0]
    degree = coeffs.size - 1
    if degree == 0:
        return np.zeros(0, dtype=complex)
    # Cauchy bound keeps the initial circle outside no root.
    bound = 1.0 + float(np.max(np.abs(coeffs[1:])))
    # A non-real, non-root-of-unity seed angle avoids symmetric stalls.
    roots = bound * np.exp(
        1j * (0.4 + 2.0 * np.pi * np.arange(degree) / degree)
    )
    for _ in range(max_iter):
        shifted = roots[:, None] - roots[None, :]
        np.fill_diagonal(shifted, 1.0)
        denom = np.prod(shifted, axis=1)
        update = _polyval(coeffs, roots) / denom
        roots = roots - update
        if np.max(np.abs(update)) < tol * max(1.0, np.max(np.abs(roots))):
            break
    return roots


def sorted_complex(values):
    """Sort complex values by (real, imag) for stable comparisons."""
    values = np.asarray(values, dtype=complex)
    order = np.lexsort((values.imag, values.real))
    return values[order]


def match_spectra(left, right):
    """Max absolute pairing error between two unordered spectra.

    Greedy globally-nearest pairing: sorting by (real, imag) is not
    stable for conjugate pairs whose real parts carry iteration noise.
    """
    left = np.asarray(left, dtype=complex)
    right = np.asarray(right, dtype=complex)
    if left.shape != right.shape:
        raise AssertionError(
            f"spectra sizes differ: {left.shape} vs {right.shape}"
        )
    if left.size == 0:
        return 0.0
    distance = np.abs(left[:, None] - right[None, :])
    worst = 0.0
    for _ in range(left.size):
        i, j = np.unravel_index(np.argmin(distance), distance.shape)
        worst = max(worst, float(distance[i, j]))
        distance[i, :] = np.inf
        distance[:, j] = np.inf
    return worst
