"""Independent reference solutions: Fourier multiplier, dense Crank-Nicolson, fine grid."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from ..config import NUMERICS
from ..errors import OracleBudgetError
from .coefficients import RegularizedCoefficient, regularize, regularize_data
from .evolution import SolutionTrace, SpatialOperator, assemble_operator, solve_homogeneous
from .grid_field import ComplexField, Grid, l2_norm
from .problem import Problem

logger = logging.getLogger(__name__)

REFINEMENTS = (2, 4)


@dataclass(frozen=True)
class OracleResult:
    """A reference field and how far it can be trusted.

    ``error_estimate`` is None for references that are exact up to rounding.
    For fine-grid references ``coarse_discrepancy`` is the distance between
    the coarse solve and the injected reference, and ``trace`` is the
    fine-grid norm series.
    """

    field: ComplexField
    method: str
    error_estimate: Optional[float] = None
    coarse_discrepancy: Optional[float] = None
    trace: Optional[SolutionTrace] = None


def fourier_constant_solution(c: float, u0: ComplexField, t: float) -> OracleResult:
    """Exact periodic solution of i u_t + c Lap u = 0: mode k picks up exp(-i c |k|^2 t)."""
    if not c > 0:
        raise ValueError(f"constant coefficient must be positive, got {c}")
    grid = u0.grid
    wave = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.h)
    k2 = sum(k**2 for k in np.meshgrid(*([wave] * grid.d), indexing="ij"))
    spectrum = np.fft.fftn(u0.values)
    values = np.fft.ifftn(spectrum * np.exp(-1j * c * k2 * t))
    return OracleResult(ComplexField(grid, values), "fourier")


def _staggered_value(left: float, right: float, staggering: str) -> float:
    if staggering == "harmonic":
        return 2.0 * left * right / (left + right)
    return 0.5 * (left + right)


def dense_operator(g: RegularizedCoefficient, staggering: str = "arithmetic") -> np.ndarray:
    """The flux-form operator as a dense matrix, built node by node."""
    grid = g.grid
    if grid.size > NUMERICS.dense_max_unknowns:
        raise OracleBudgetError(
            f"dense reference limited to {NUMERICS.dense_max_unknowns} unknowns, grid has {grid.size}"
        )
    values = g.field.values
    inv_h2 = 1.0 / grid.h**2
    matrix = np.zeros((grid.size, grid.size))
    for flat in range(grid.size):
        node = np.unravel_index(flat, grid.shape)
        for axis in range(grid.d):
            ahead = list(node)
            behind = list(node)
            ahead[axis] = (node[axis] + 1) % grid.n
            behind[axis] = (node[axis] - 1) % grid.n
            w_plus = _staggered_value(values[node], values[tuple(ahead)], staggering)
            w_minus = _staggered_value(values[tuple(behind)], values[node], staggering)
            matrix[flat, np.ravel_multi_index(ahead, grid.shape)] += w_plus * inv_h2
            matrix[flat, np.ravel_multi_index(behind, grid.shape)] += w_minus * inv_h2
            matrix[flat, flat] -= (w_plus + w_minus) * inv_h2
    return matrix


def dense_reference_step(L: SpatialOperator, u: ComplexField, dt: float) -> OracleResult:
    """One Crank-Nicolson step by dense LU, sharing nothing with the sparse path."""
    matrix = dense_operator(L.coefficient, L.staggering)
    if dt == 0:
        return OracleResult(u, "dense")
    identity = np.eye(L.grid.size)
    flat = u.values.ravel()
    rhs = (identity + 0.5j * dt * matrix) @ flat
    values = linalg.solve(identity - 0.5j * dt * matrix, rhs)
    return OracleResult(ComplexField(L.grid, values), "dense")


def _inject(u: ComplexField, grid: Grid, refinement: int) -> ComplexField:
    index = (slice(None, None, refinement),) * grid.d
    return ComplexField(grid, u.values[index])


def _setup(problem: Problem, epsilon: Optional[float]):
    if problem.coefficient.is_regular:
        g = problem.classical_coefficient()
    else:
        g = regularize(problem.coefficient, problem.mollifier, epsilon, problem.grid)  # type: ignore[arg-type]
    try:
        u0 = problem.classical_data()
    except ValueError:
        if epsilon is None:
            raise
        u0 = regularize_data(problem.data, problem.mollifier, epsilon, problem.grid)  # type: ignore[arg-type]
    return g, u0


def fine_grid_reference(
    problem: Problem, refinement: int = 2, epsilon: Optional[float] = None
) -> OracleResult:
    """Re-solve the problem with ``refinement`` times the resolution and inject it.

    Regular coefficients are sampled pointwise (no mollification); singular
    ones, and delta data, are mollified at ``epsilon`` (the smallest ladder
    scale). The fine time step is min(dt / r, automatic fine dt). The
    returned estimate is the Richardson bound ||u_fine - u_coarse|| / (r^2 - 1).
    """
    if refinement not in REFINEMENTS:
        raise ValueError(f"refinement must be one of {REFINEMENTS}, got {refinement}")
    needs_epsilon = not problem.coefficient.is_regular
    if needs_epsilon and epsilon is None:
        raise ValueError("a singular coefficient needs a mollification scale for its reference")
    fine_grid = problem.grid.refined(refinement)
    if fine_grid.size > NUMERICS.fine_grid_max_unknowns:
        raise OracleBudgetError(
            f"fine grid {fine_grid.describe()} exceeds {NUMERICS.fine_grid_max_unknowns} unknowns"
        )

    g_coarse, u0_coarse = _setup(problem, epsilon)
    dt = problem.resolved_dt(g_coarse)
    fine = problem.on_grid(fine_grid)
    g_fine, u0_fine = _setup(fine, epsilon)
    dt_fine = min(dt / refinement, fine.resolved_dt(g_fine))
    logger.info(
        f"Fine-grid reference: n={fine_grid.n}, dt={dt_fine:.4g} "
        f"(coarse n={problem.grid.n}, dt={dt:.4g})"
    )

    fine_trace = solve_homogeneous(
        assemble_operator(g_fine, problem.staggering), u0_fine, problem.stepper.with_dt(dt_fine)
    )
    coarse_trace = solve_homogeneous(
        assemble_operator(g_coarse, problem.staggering), u0_coarse, problem.stepper.with_dt(dt)
    )
    reference = _inject(fine_trace.final, problem.grid, refinement)
    discrepancy = l2_norm(coarse_trace.final - reference)
    estimate = discrepancy / (refinement**2 - 1)
    logger.debug(f"Reference discrepancy {discrepancy:.3e}, Richardson estimate {estimate:.3e}")
    return OracleResult(reference, "fine_grid", estimate, discrepancy, fine_trace)
