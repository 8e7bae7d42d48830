"""Acceptance-size runs of every campaign. Deselect with ``-m "not slow"``."""

import pytest

from singular_mass_lab.core.coefficients import Bump, CoefficientSpec, EpsilonLadder, make_mollifier, regularize
from singular_mass_lab.core.evolution import assemble_operator, check_operator
from singular_mass_lab.core.experiments import (
    h2_bound_matrix,
    run_consistency,
    run_duhamel_check,
    run_energy,
    run_h2_bound,
    run_moderateness,
    run_time_derivative,
    run_uniqueness,
)
from singular_mass_lab.core.grid_field import Grid
from singular_mass_lab.core.spec_text import parse_coefficient_spec

pytestmark = pytest.mark.slow

LADDER = EpsilonLadder.geometric(0.5, 0.5, 5)


def test_energy_is_conserved_for_a_point_mass(make_problem, delta_spec):
    ledger = run_energy(make_problem(delta_spec, n=512, T=1.0), 0.05)
    assert ledger.max_drift <= 1e-10
    assert ledger.passed


@pytest.mark.parametrize(
    "spec_name, expected, tolerance",
    [("delta_spec", 2.0, 0.1), ("jump_spec", 1.0, 0.1), ("constant_spec", 0.0, 0.05)],
)
def test_moderateness_exponents(request, spec_name, expected, tolerance):
    spec = request.getfixturevalue(spec_name)
    report = run_moderateness(spec, make_mollifier(), LADDER, Grid(1, 4.0, 2048))
    assert report.exponent == pytest.approx(expected, abs=tolerance)


def test_uniqueness_decays_at_second_order(make_problem, bump_spec):
    report = run_uniqueness(make_problem(bump_spec, n=512, T=0.5), make_mollifier("polynomial"), LADDER)
    assert not report.identical
    assert report.decay.exponent <= -1.9


def test_consistency_with_a_regular_coefficient(make_problem):
    # a wide bump keeps the hypothesis in its second-order regime down to the finest scale
    spec = CoefficientSpec(1.0, (Bump((0.0,), 3.5, 1.0),))
    report = run_consistency(make_problem(spec, n=1024, T=0.1), EpsilonLadder.geometric(0.25, 0.5, 4))
    assert report.error_rate.fitted and not any(report.error_rate.floored)
    assert report.error_rate.exponent == pytest.approx(-2.0, abs=0.3)
    assert report.hypothesis_rate.exponent == pytest.approx(-2.0, abs=0.2)
    assert report.monotone


def test_duhamel_agreement_under_refinement(make_problem, bump_spec):
    report = run_duhamel_check(make_problem(bump_spec, n=512, T=0.1), make_mollifier("polynomial"), 0.125, halvings=3)
    assert report.discrepancy <= 1e-3
    assert report.slope <= -1.8
    assert report.passed


@pytest.mark.parametrize(
    "text, d",
    [
        ("background=1.0", 1),
        ("background=1.0; delta(center=0.0, weight=1.0)", 1),
        ("background=1.0; jump(center=0.0, height=1.0)", 1),
        ("background=0.5; bump(center=0.5, width=1.0, height=2.0)", 1),
        ("background=1.0; delta(center=[0.0, 0.0], weight=1.0); jump(center=1.0, height=0.5)", 2),
    ],
)
def test_operator_structure(text, d):
    grid = Grid(d, 4.0, 256 if d == 1 else 32)
    g = regularize(parse_coefficient_spec(text), make_mollifier("bump", d), 0.5, grid)
    for staggering in ("arithmetic", "harmonic"):
        assert check_operator(assemble_operator(g, staggering)).passed


def test_time_derivative_shift_is_second_order(make_problem, delta_spec):
    report = run_time_derivative(make_problem(delta_spec, n=256, T=0.2), 0.25)
    assert len(report.epsilons) == 4
    assert report.exponent <= -1.8


def test_h2_bound_over_the_case_matrix(make_problem, delta_spec, jump_spec, bump_spec):
    problems = {
        "delta": make_problem(delta_spec, T=0.25),
        "jump": make_problem(jump_spec, T=0.25),
        "bump": make_problem(bump_spec, T=0.25),
    }
    report = run_h2_bound(h2_bound_matrix(problems, [128, 256, 512], [0.5, 0.25, 0.125]))
    assert len(report.rows) == 27
    assert report.passed
