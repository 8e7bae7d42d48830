import numpy as np
import pytest

from singular_mass_lab.config import StepperConfig
from singular_mass_lab.core.coefficients import CoefficientSpec, Delta, make_mollifier, regularize
from singular_mass_lab.core.evolution import assemble_operator, solve_homogeneous, step_cn
from singular_mass_lab.core.grid_field import Grid, l2_norm, sample_field
from singular_mass_lab.core.oracle import (
    dense_operator,
    dense_reference_step,
    fine_grid_reference,
    fourier_constant_solution,
)
from singular_mass_lab.errors import CoefficientError, OracleBudgetError

SMALL = Grid(1, 4.0, 64)


def _gaussian(grid):
    return sample_field(grid, lambda x: np.exp(-(x**2) + 1j * x))


class TestFourier:
    def test_zero_time_is_the_data(self):
        u0 = _gaussian(SMALL)
        np.testing.assert_allclose(fourier_constant_solution(2.0, u0, 0.0).field.values, u0.values, atol=1e-14)

    def test_composes_in_time(self):
        u0 = _gaussian(SMALL)
        once = fourier_constant_solution(1.5, u0, 0.3).field
        twice = fourier_constant_solution(1.5, fourier_constant_solution(1.5, u0, 0.1).field, 0.2).field
        np.testing.assert_allclose(once.values, twice.values, atol=1e-13)
        assert l2_norm(once) == pytest.approx(l2_norm(u0), rel=1e-13)

    def test_needs_a_positive_coefficient(self):
        with pytest.raises(ValueError):
            fourier_constant_solution(0.0, _gaussian(SMALL), 1.0)

    def test_crank_nicolson_converges_to_it(self):
        errors = []
        for n in (128, 256):
            grid = Grid(1, 8.0, n)
            u0 = _gaussian(grid)
            g = regularize(CoefficientSpec(1.0), make_mollifier(), 0.5, grid)
            trace = solve_homogeneous(assemble_operator(g), u0, StepperConfig(T=0.5))
            errors.append(l2_norm(trace.final - fourier_constant_solution(1.0, u0, 0.5).field))
        assert errors[1] < errors[0] / 3.0


class TestDense:
    @pytest.mark.parametrize("staggering", ["arithmetic", "harmonic"])
    def test_dense_matches_sparse_assembly(self, delta_spec, staggering):
        g = regularize(delta_spec, make_mollifier(), 0.25, SMALL)
        L = assemble_operator(g, staggering)
        np.testing.assert_allclose(dense_operator(g, staggering), L.matrix.toarray(), rtol=1e-14, atol=1e-10)

    def test_two_dimensional_dense_operator(self):
        grid = Grid(2, 4.0, 16)
        g = regularize(CoefficientSpec(1.0, (Delta((0.0, 0.0)),)), make_mollifier("bump", 2), 1.0, grid)
        np.testing.assert_allclose(dense_operator(g), assemble_operator(g).matrix.toarray(), rtol=1e-14, atol=1e-10)

    def test_budget(self, delta_spec):
        g = regularize(delta_spec, make_mollifier(), 0.25, Grid(1, 4.0, 512))
        with pytest.raises(OracleBudgetError):
            dense_operator(g)

    def test_dense_and_sparse_steps_agree(self, delta_spec):
        g = regularize(delta_spec, make_mollifier(), 0.25, SMALL)
        L = assemble_operator(g)
        dt = 0.01
        u = v = _gaussian(SMALL)
        for _ in range(100):
            expected = dense_reference_step(L, u, dt).field
            u = step_cn(L, u, dt)
            assert l2_norm(u - expected) <= 1e-13 * l2_norm(expected)
            v = dense_reference_step(L, v, dt).field
        assert l2_norm(u - v) <= 1e-12 * l2_norm(v)


class TestFineGrid:
    def test_constant_coefficient_reference_matches_fourier(self, make_problem, constant_spec):
        problem = make_problem(constant_spec, n=64, T=0.2)
        reference = fine_grid_reference(problem, refinement=2)
        exact = fourier_constant_solution(1.0, problem.classical_data(), 0.2).field
        assert reference.method == "fine_grid"
        assert reference.error_estimate == pytest.approx(reference.coarse_discrepancy / 3.0)
        assert l2_norm(reference.field - exact) <= 2.0 * reference.error_estimate
        assert reference.trace is not None and reference.trace.T == 0.2

    def test_singular_coefficient_needs_an_epsilon(self, make_problem, delta_spec):
        with pytest.raises(ValueError):
            fine_grid_reference(make_problem(delta_spec))

    def test_singular_coefficient_is_mollified(self, make_problem, delta_spec):
        reference = fine_grid_reference(make_problem(delta_spec, n=64, T=0.05), epsilon=0.25)
        assert reference.field.grid == SMALL
        assert reference.error_estimate >= 0.0

    def test_refinement_must_be_supported(self, make_problem, constant_spec):
        with pytest.raises(ValueError):
            fine_grid_reference(make_problem(constant_spec), refinement=3)

    def test_budget(self, make_problem, constant_spec):
        with pytest.raises(OracleBudgetError):
            fine_grid_reference(make_problem(constant_spec, n=1 << 22))

    def test_delta_data_without_epsilon(self, make_problem, constant_spec):
        with pytest.raises(CoefficientError):
            fine_grid_reference(make_problem(constant_spec, data=Delta(0.0)))


@pytest.mark.slow
def test_second_order_convergence_in_h():
    errors, spacings = [], []
    for n in (128, 256, 512):
        grid = Grid(1, 8.0, n)
        u0 = sample_field(grid, lambda x: np.exp(-(x**2)))
        g = regularize(CoefficientSpec(1.0), make_mollifier(), 0.5, grid)
        # automatic dt is proportional to h^2
        trace = solve_homogeneous(assemble_operator(g), u0, StepperConfig(T=0.5))
        errors.append(l2_norm(trace.final - fourier_constant_solution(1.0, u0, 0.5).field))
        spacings.append(grid.h)
    slope = np.polyfit(np.log(spacings), np.log(errors), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)
