import math

import numpy as np
import pytest
from scipy import integrate

from singular_mass_lab.core.coefficients import (
    Bump,
    CoefficientSpec,
    Delta,
    EpsilonLadder,
    GaussianPacket,
    Jump,
    Mollifier,
    RegularizedCoefficient,
    Sampled,
    data_moderateness_ladder,
    make_mollifier,
    moderateness_ladder,
    positivity_bound,
    regularize,
    regularize_data,
    sample_coefficient,
    sample_data,
    scale_mollifier,
)
from singular_mass_lab.core.grid_field import Grid, RealField, l2_norm, translate, w1inf_norm
from singular_mass_lab.core.rates import fit_rate
from singular_mass_lab.errors import CoefficientError, ResolutionError

FINE = Grid(1, 4.0, 512)


class TestMollifier:
    @pytest.mark.parametrize("variant", ["bump", "polynomial"])
    def test_unit_mass_in_one_dimension(self, variant):
        psi = make_mollifier(variant, 1)
        mass, _ = integrate.quad(lambda x: float(psi(np.array(x))), -1.0, 1.0, epsabs=1e-13)
        assert mass == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("variant", ["bump", "polynomial"])
    def test_unit_mass_in_two_dimensions(self, variant):
        psi = make_mollifier(variant, 2)
        mass, _ = integrate.quad(
            lambda r: 2 * math.pi * r * float(psi.radial(np.array(r))), 0.0, 1.0, epsabs=1e-13
        )
        assert mass == pytest.approx(1.0, abs=1e-10)

    def test_unknown_variant(self):
        with pytest.raises(CoefficientError):
            Mollifier("gaussian")

    def test_scaling(self):
        psi = make_mollifier("bump")
        assert scale_mollifier(psi, 0.5, 0.0) == pytest.approx(2.0 * psi.normalization * math.exp(-1.0))
        assert scale_mollifier(psi, 0.5, 0.6) == 0.0

    def test_scaling_checks_its_arguments(self):
        psi = make_mollifier("bump", 2)
        with pytest.raises(CoefficientError):
            scale_mollifier(psi, 0.5, 0.1)
        with pytest.raises(ResolutionError):
            scale_mollifier(psi, 1.5, (0.1, 0.1))

    @pytest.mark.parametrize("variant, d", [("bump", 1), ("polynomial", 1), ("bump", 2), ("polynomial", 2)])
    def test_primitive_is_a_symmetric_distribution_function(self, variant, d):
        psi = make_mollifier(variant, d)
        t = np.linspace(-1.0, 1.0, 41)
        values = psi.primitive(t)
        assert values[0] == pytest.approx(0.0, abs=1e-10)
        assert values[-1] == pytest.approx(1.0, abs=1e-10)
        assert psi.primitive(np.array(0.0)) == pytest.approx(0.5, abs=1e-12)
        assert np.all(np.diff(values) >= 0.0)
        np.testing.assert_allclose(values + values[::-1], 1.0, atol=1e-10)

    @pytest.mark.parametrize("t", [0.25, 0.5, 0.75])
    def test_two_dimensional_polynomial_primitive_has_the_closed_form_marginal(self, t):
        # the chord integral of (4/pi)(1 - r^2)^3 is (128 / (35 pi)) (1 - s^2)^(7/2)
        tail, _ = integrate.quad(lambda s: (1.0 - s * s) ** 3.5, 0.0, t, epsabs=1e-15)
        expected = 0.5 + 128.0 / (35.0 * math.pi) * tail
        assert make_mollifier("polynomial", 2).primitive(np.array(t)) == pytest.approx(expected, abs=1e-10)


class TestSpecs:
    def test_background_must_be_positive(self):
        with pytest.raises(CoefficientError):
            CoefficientSpec(0.0)

    @pytest.mark.parametrize("atom", [lambda: Delta(0.0, -1.0), lambda: Jump(0.0, -1.0), lambda: Bump(0.0, 0.0)])
    def test_atoms_validate(self, atom):
        with pytest.raises(CoefficientError):
            atom()

    def test_regularity(self, constant_spec, delta_spec, jump_spec, bump_spec):
        assert constant_spec.is_regular
        assert bump_spec.is_regular
        assert not delta_spec.is_regular
        assert not jump_spec.is_regular

    def test_shift_moves_every_atom(self, delta_spec, jump_spec):
        assert delta_spec.shifted(0.5).atoms[0].center == (0.5,)
        assert jump_spec.shifted(-1.0).atoms[0].center == -1.0

    def test_sampled_atoms_must_be_nonnegative(self, grid_1d):
        with pytest.raises(CoefficientError):
            Sampled(RealField(grid_1d, -np.ones(64)))


class TestEpsilonLadder:
    def test_geometric(self):
        ladder = EpsilonLadder.geometric(0.5, 0.5, 5)
        assert ladder.values == (0.5, 0.25, 0.125, 0.0625, 0.03125)
        assert ladder.smallest == 0.03125
        assert len(ladder) == 5

    @pytest.mark.parametrize(
        "values",
        [(0.5, 0.25, 0.125), (0.5, 0.5, 0.25, 0.125), (2.0, 0.5, 0.25, 0.125), (0.5, 0.25, 0.125, 0.0)],
    )
    def test_rejects_bad_ladders(self, values):
        with pytest.raises(ValueError):
            EpsilonLadder(values)

    def test_ratio_must_shrink(self):
        with pytest.raises(ValueError):
            EpsilonLadder.geometric(0.5, 1.0, 5)


class TestRegularize:
    def test_constant_passes_through(self, constant_spec):
        g = regularize(constant_spec, make_mollifier(), 0.25, FINE)
        assert np.all(g.field.values == 1.0)
        assert g.w1inf == 1.0
        assert g.grad_sup == 0.0

    def test_delta_keeps_its_mass(self, delta_spec):
        g = regularize(delta_spec, make_mollifier(), 0.25, FINE)
        mass = FINE.h * np.sum(g.field.values - 1.0)
        assert mass == pytest.approx(1.0, rel=1e-3)
        assert g.c0 == 1.0

    def test_delta_commutes_with_translation(self, delta_spec):
        shift = 8
        psi = make_mollifier()
        g = regularize(delta_spec, psi, 0.25, FINE)
        moved = regularize(delta_spec.shifted(shift * FINE.h), psi, 0.25, FINE)
        np.testing.assert_allclose(moved.field.values, translate(g.field, shift).values, rtol=1e-10, atol=1e-12)

    def test_jump_profile(self, jump_spec):
        g = regularize(jump_spec, make_mollifier(), 0.25, FINE)
        x = FINE.axis_nodes()
        values = g.field.values
        assert values[np.argmin(np.abs(x))] == pytest.approx(1.5, abs=1e-12)
        assert values[np.argmin(np.abs(x - 1.0))] == pytest.approx(2.0, abs=1e-12)
        assert values[np.argmin(np.abs(x + 1.0))] == pytest.approx(1.0, abs=1e-12)
        assert np.all(values >= 1.0) and np.all(values <= 2.0 + 1e-12)

    def test_jump_needs_a_wide_enough_box(self, jump_spec):
        with pytest.raises(ResolutionError):
            regularize(jump_spec, make_mollifier(), 0.75, Grid(1, 2.0, 256))

    def test_bump_stays_between_its_bounds(self, bump_spec):
        g = regularize(bump_spec, make_mollifier(), 0.125, FINE)
        assert g.field.values.min() >= 1.0
        assert g.maximum <= 2.0

    def test_jump_in_two_dimensions_depends_on_x_only(self):
        grid = Grid(2, 4.0, 32)
        g = regularize(CoefficientSpec(1.0, (Jump(0.0, 1.0),)), make_mollifier("bump", 2), 0.5, grid)
        np.testing.assert_allclose(g.field.values, g.field.values[:, :1] * np.ones((1, 32)), atol=1e-12)

    def test_sampled_constant_passes_through(self, grid_1d):
        atom = Sampled(RealField(grid_1d, np.full(64, 0.5)))
        g = regularize(CoefficientSpec(1.0, (atom,)), make_mollifier(), 0.5, grid_1d)
        np.testing.assert_allclose(g.field.values, 1.5, rtol=1e-14)

    def test_lower_bound_is_certified(self, grid_1d):
        with pytest.raises(CoefficientError):
            RegularizedCoefficient(RealField(grid_1d, np.full(64, 0.5)), 0.1, 1.0)

    def test_positivity_bound(self, bump_spec):
        family = moderateness_ladder(bump_spec, make_mollifier(), EpsilonLadder.geometric(), FINE)
        assert positivity_bound([g for _, g in family]) >= 1.0


class TestLadders:
    def test_unresolvable_ladder_is_rejected(self, delta_spec, grid_1d):
        with pytest.raises(ResolutionError):
            moderateness_ladder(delta_spec, make_mollifier(), EpsilonLadder.geometric(), grid_1d)

    def test_delta_grows_along_the_ladder(self, delta_spec):
        family = moderateness_ladder(delta_spec, make_mollifier(), EpsilonLadder.geometric(), FINE)
        norms = [g.w1inf for _, g in family]
        assert all(b > a for a, b in zip(norms, norms[1:]))

    def test_bump_keeps_its_mass(self, bump_spec):
        exact = sample_coefficient(bump_spec, FINE)
        for eps in (0.5, 0.125, 0.03125):
            smooth = regularize(bump_spec, make_mollifier(), eps, FINE)
            mass = np.sum(smooth.field.values - exact.field.values) * FINE.h
            assert mass == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("variant", ["bump", "polynomial"])
    def test_bump_converges_monotonically_in_w1inf(self, bump_spec, variant):
        exact = sample_coefficient(bump_spec, FINE)
        distances = [
            w1inf_norm(RealField(FINE, g.field.values - exact.field.values))
            for _, g in moderateness_ladder(bump_spec, make_mollifier(variant), EpsilonLadder.geometric(), FINE)
        ]
        assert all(b <= 1.05 * a for a, b in zip(distances, distances[1:]))
        assert distances[-1] < distances[0]

    def test_delta_data_grows_along_the_ladder(self):
        pairs = data_moderateness_ladder(Delta(0.0), make_mollifier(), EpsilonLadder.geometric(), FINE)
        values = [value for _, value in pairs]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestData:
    def test_mollified_packet_approaches_the_samples(self):
        packet = GaussianPacket((0.0,), 1.0, 2.0)
        exact = sample_data(packet, FINE)
        smooth = regularize_data(packet, make_mollifier(), 0.03125, FINE)
        assert l2_norm(smooth - exact) < 1e-2 * l2_norm(exact)

    def test_regular_samples(self, bump_spec):
        g = sample_coefficient(bump_spec, FINE)
        assert g.epsilon is None
        assert g.maximum == pytest.approx(2.0)

    def test_singular_specs_have_no_samples(self, delta_spec):
        with pytest.raises(CoefficientError):
            sample_coefficient(delta_spec, FINE)
        with pytest.raises(CoefficientError):
            sample_data(Delta(0.0), FINE)

    def test_mollified_packet_error_is_second_order(self):
        packet = GaussianPacket((0.0,), 1.0, 2.0)
        exact = sample_data(packet, FINE)
        errors = [
            (eps, l2_norm(regularize_data(packet, make_mollifier(), eps, FINE) - exact))
            for eps in (0.25, 0.125, 0.0625, 0.03125)
        ]
        assert all(b < a for (_, a), (_, b) in zip(errors, errors[1:]))
        exponent, _ = fit_rate(errors)
        assert exponent == pytest.approx(-2.0, abs=0.2)
