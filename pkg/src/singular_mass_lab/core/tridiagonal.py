"""Direct solver for periodic (cyclic) tridiagonal systems."""

import logging

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)


class CyclicTridiagonalSolver:
    """Solves M x = b where M is tridiagonal plus the two periodic corners.

    ``lower[j]`` is M[j, j-1] and ``upper[j]`` is M[j, j+1], indices taken
    modulo n, so ``lower[0]`` and ``upper[-1]`` are the corner entries.
    The corners are folded into a rank-one update and removed with the
    Sherman-Morrison formula; the correction vector is computed once.
    """

    def __init__(self, lower: np.ndarray, diag: np.ndarray, upper: np.ndarray):
        lower = np.asarray(lower, dtype=complex)
        diag = np.asarray(diag, dtype=complex)
        upper = np.asarray(upper, dtype=complex)
        n = diag.shape[0]
        if n < 3 or lower.shape != (n,) or upper.shape != (n,):
            raise ValueError(f"cyclic tridiagonal system needs three length-n bands with n >= 3, got n={n}")
        self.n = n
        self._lower = lower

        gamma = -diag[0] if diag[0] != 0 else -1.0
        self._gamma = gamma
        bands = np.zeros((3, n), dtype=complex)
        bands[0, 1:] = upper[:-1]
        bands[1] = diag
        bands[2, :-1] = lower[1:]
        bands[1, 0] -= gamma
        bands[1, -1] -= lower[0] * upper[-1] / gamma
        self._bands = bands

        rank_one = np.zeros(n, dtype=complex)
        rank_one[0] = gamma
        rank_one[-1] = upper[-1]
        self._correction = self._solve_banded(rank_one)
        self._denominator = 1.0 + self._dot_v(self._correction)
        if self._denominator == 0:
            raise np.linalg.LinAlgError("singular cyclic tridiagonal system")

    def _solve_banded(self, rhs: np.ndarray) -> np.ndarray:
        return linalg.solve_banded((1, 1), self._bands, rhs, check_finite=False)

    def _dot_v(self, y: np.ndarray) -> complex:
        # v = (1, 0, ..., 0, lower[0] / gamma)
        return y[0] + self._lower[0] * y[-1] / self._gamma

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        y = self._solve_banded(np.asarray(rhs, dtype=complex))
        return y - (self._dot_v(y) / self._denominator) * self._correction
