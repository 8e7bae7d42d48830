import numpy as np
import pytest

from singular_mass_lab.core.tridiagonal import CyclicTridiagonalSolver


def _dense(lower, diag, upper):
    n = len(diag)
    matrix = np.diag(diag).astype(complex)
    for j in range(n):
        matrix[j, (j - 1) % n] += lower[j]
        matrix[j, (j + 1) % n] += upper[j]
    return matrix


def _random_bands(rng, n):
    lower = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    upper = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    diag = 4.0 + rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return lower, diag, upper


@pytest.mark.parametrize("n", [3, 4, 17, 64])
def test_matches_dense_solve(rng, n):
    lower, diag, upper = _random_bands(rng, n)
    rhs = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    solver = CyclicTridiagonalSolver(lower, diag, upper)
    expected = np.linalg.solve(_dense(lower, diag, upper), rhs)
    np.testing.assert_allclose(solver.solve(rhs), expected, rtol=1e-12, atol=1e-12)


def test_reusable_across_right_hand_sides(rng):
    lower, diag, upper = _random_bands(rng, 32)
    matrix = _dense(lower, diag, upper)
    solver = CyclicTridiagonalSolver(lower, diag, upper)
    for _ in range(3):
        rhs = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        np.testing.assert_allclose(matrix @ solver.solve(rhs), rhs, atol=1e-12)


def test_zero_leading_diagonal(rng):
    lower, diag, upper = _random_bands(rng, 8)
    diag[0] = 0.0
    matrix = _dense(lower, diag, upper)
    rhs = np.arange(8.0) + 0j
    solver = CyclicTridiagonalSolver(lower, diag, upper)
    np.testing.assert_allclose(solver.solve(rhs), np.linalg.solve(matrix, rhs), rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("n, lengths", [(2, (2, 2, 2)), (5, (4, 5, 5)), (5, (5, 5, 6))])
def test_rejects_malformed_bands(n, lengths):
    lower, diag, upper = (np.ones(k, dtype=complex) for k in lengths)
    with pytest.raises(ValueError):
        CyclicTridiagonalSolver(lower, diag, upper)
