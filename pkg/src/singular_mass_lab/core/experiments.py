"""Verification campaigns over epsilon ladders.

Each ``run_*`` function solves what it needs, fits what it measures and
returns an immutable report. Ladder points are independent: campaigns
accept a ``mapper`` (see :class:`~singular_mass_lab.worker.LadderWorkerPool`)
and call module-level job functions through it, so the points can run in
worker processes.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import NUMERICS, StepperConfig
from ..errors import ConsistencyHypothesisError
from .coefficients import (
    CoefficientSpec,
    EpsilonLadder,
    Mollifier,
    data_moderateness_ladder,
    moderateness_ladder,
    positivity_bound,
)
from .evolution import (
    Mapper,
    OperatorCheck,
    SolutionTrace,
    SourceTerm,
    assemble_operator,
    check_operator,
    default_time_step,
    duhamel_compose,
    solve_homogeneous,
    step_cn,
    step_times,
    time_derivative_data,
)
from .grid_field import (
    ComplexField,
    Grid,
    RealField,
    h2_norm,
    l2_norm,
    w1inf_norm,
    w1inf_parts,
)
from .oracle import fine_grid_reference
from .problem import Problem
from .rates import RateReport, dominant_exponent, fit_rate, rate_report

logger = logging.getLogger(__name__)

# snapshots kept for the forcing integral of the uniqueness estimate
_FORCING_SAMPLES = 256


def _sequential(fn, items) -> List:
    return [fn(*item) for item in items]


def _trapezoid(times: Sequence[float], values: Sequence[float]) -> float:
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    return float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(t)))


# ---------------------------------------------------------------------------
# Energy


@dataclass(frozen=True)
class EnergyLedger:
    """Conservation record of one regularized solve."""

    epsilon: float
    dt: float
    trace: SolutionTrace
    operator_check: OperatorCheck

    @property
    def times(self) -> Tuple[float, ...]:
        return tuple(self.trace.times)

    @property
    def drift(self) -> Tuple[float, ...]:
        return tuple(float(x) for x in self.trace.drift)

    @property
    def max_drift(self) -> float:
        return self.trace.max_drift

    @property
    def energy_form(self) -> Tuple[float, ...]:
        return tuple(self.trace.energy_form)

    @property
    def energy_form_drift(self) -> float:
        return self.trace.energy_form_drift

    @property
    def passed(self) -> bool:
        return (
            self.max_drift <= NUMERICS.drift_tolerance
            and self.energy_form_drift <= NUMERICS.energy_form_tolerance
            and self.operator_check.passed
        )

    def to_frame(self) -> pd.DataFrame:
        return self.trace.to_frame()

    def summary(self) -> str:
        return (
            f"max drift {self.max_drift:.2e}, energy form drift {self.energy_form_drift:.2e}, "
            f"hermitian defect {self.operator_check.hermitian_defect:.1e} "
            f"({len(self.trace.times) - 1} steps, dt={self.dt:.3g})"
        )


def run_energy(problem: Problem, epsilon: float) -> EnergyLedger:
    """Solve once at ``epsilon`` and record the L2 drift and the weighted gradient form."""
    g = problem.regularized(epsilon)
    L = assemble_operator(g, problem.staggering)
    check = check_operator(L)
    if not check.passed:
        logger.error(f"Operator check failed at eps={epsilon:g}: {check}")
    dt = problem.resolved_dt(g)
    trace = solve_homogeneous(L, problem.initial_data(epsilon), problem.stepper.with_dt(dt))
    ledger = EnergyLedger(epsilon, dt, trace, check)
    logger.info(f"Energy at eps={epsilon:g}: {ledger.summary()}")
    return ledger


# ---------------------------------------------------------------------------
# Moderateness


@dataclass(frozen=True)
class ModeratenessReport:
    """Growth of ||g_eps||_W1inf, and optionally of the data and solution H2 norms.

    ``coefficient.exponent`` is the dominant-term exponent (largest of the
    sup and gradient parts); ``raw_exponent`` is the plain slope of the sum.
    """

    coefficient: RateReport
    components: Dict[str, RateReport]
    raw_exponent: float
    positivity: float
    data: Optional[RateReport] = None
    solution: Optional[RateReport] = None

    @property
    def exponent(self) -> float:
        return self.coefficient.exponent

    @property
    def bound_exponent(self) -> Optional[float]:
        """2 N1 + N2, the solution-side growth the existence proof allows."""
        if self.data is None:
            return None
        data_exponent = max(self.data.exponent, 0.0) if self.data.fitted else 0.0
        return 2.0 * max(self.exponent, 0.0) + data_exponent

    def to_frame(self) -> pd.DataFrame:
        frame = self.coefficient.to_frame()
        for report in list(self.components.values()) + [self.data, self.solution]:
            if report is not None:
                frame[report.quantity] = report.values
        return frame

    def summary(self) -> str:
        text = f"W1inf exponent {self.exponent:+.3f} (raw {self.raw_exponent:+.3f}), inf g_eps {self.positivity:.4g}"
        if self.data is not None and self.data.fitted:
            text += f", data H2 exponent {self.data.exponent:+.3f}"
        if self.solution is not None and self.solution.fitted:
            text += f", solution H2 exponent {self.solution.exponent:+.3f} (bound {self.bound_exponent:.2f})"
        return text


def _solution_h2_point(problem: Problem, epsilon: float) -> float:
    g = problem.regularized(epsilon)
    trace = solve_homogeneous(
        assemble_operator(g, problem.staggering),
        problem.initial_data(epsilon),
        problem.stepper.with_dt(problem.resolved_dt(g)),
    )
    return trace.sup_h2


def run_moderateness(
    g: CoefficientSpec,
    psi: Mollifier,
    ladder: EpsilonLadder,
    grid: Grid,
    problem: Optional[Problem] = None,
    solution_side: bool = False,
    mapper: Optional[Mapper] = None,
) -> ModeratenessReport:
    """Fit the W1inf growth exponent of g_eps along the ladder.

    With a ``problem`` (whose coefficient should be ``g``) the data-side
    H2 ladder is added and, with ``solution_side``, the sup_t ||u_eps||_H2
    ladder as well.
    """
    regularized = moderateness_ladder(g, psi, ladder, grid)
    epsilons = [eps for eps, _ in regularized]
    parts = [w1inf_parts(c.field) for _, c in regularized]
    total = rate_report("w1inf", [(e, c.w1inf) for e, (_, c) in zip(epsilons, regularized)])
    components = {
        "sup": rate_report("sup", list(zip(epsilons, [p[0] for p in parts]))),
        "gradient": rate_report("gradient", list(zip(epsilons, [p[1] for p in parts]))),
    }
    exponent, dominant = dominant_exponent(components)
    coefficient = RateReport(
        "w1inf",
        total.epsilons,
        total.values,
        exponent,
        total.residual,
        total.intercept,
        total.floored,
        note=f"dominant term: {dominant}" if dominant else total.note,
    )

    data = solution = None
    if problem is not None:
        data = rate_report("data_h2", data_moderateness_ladder(problem.data, psi, ladder, grid))
        if solution_side:
            run = mapper or _sequential
            sups = run(_solution_h2_point, [(problem, eps) for eps in epsilons])
            solution = rate_report("solution_h2", list(zip(epsilons, sups)))

    report = ModeratenessReport(
        coefficient,
        components,
        total.exponent,
        positivity_bound([c for _, c in regularized]),
        data,
        solution,
    )
    logger.info(f"Moderateness: {report.summary()}")
    return report


# ---------------------------------------------------------------------------
# Uniqueness


@dataclass(frozen=True)
class UniquenessPoint:
    epsilon: float
    difference: float
    coefficient_difference: float
    data_difference: float
    forcing_integral: float

    @property
    def estimate(self) -> float:
        """||U(0)|| + int_0^T ||f_eps(s)|| ds, the stability bound on the difference."""
        return self.data_difference + self.forcing_integral


@dataclass(frozen=True)
class UniquenessReport:
    mollifiers: Tuple[str, str]
    points: Tuple[UniquenessPoint, ...]
    decay: RateReport
    coefficient_decay: RateReport

    @property
    def identical(self) -> bool:
        return all(p.difference == 0.0 for p in self.points)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "epsilon": [p.epsilon for p in self.points],
                "difference": [p.difference for p in self.points],
                "difference_floored": self.decay.floored or (False,) * len(self.points),
                "coefficient_difference": [p.coefficient_difference for p in self.points],
                "data_difference": [p.data_difference for p in self.points],
                "forcing_integral": [p.forcing_integral for p in self.points],
                "estimate": [p.estimate for p in self.points],
            }
        )

    def summary(self) -> str:
        first, second = self.mollifiers
        return f"{first} vs {second}: {self.decay.summary()}; {self.coefficient_decay.summary()}"


def _uniqueness_point(problem: Problem, second: Mollifier, epsilon: float) -> UniquenessPoint:
    g = problem.regularized(epsilon)
    g_tilde = problem.regularized(epsilon, second)
    L = assemble_operator(g, problem.staggering)
    L_tilde = assemble_operator(g_tilde, problem.staggering)
    u0 = problem.initial_data(epsilon)
    u0_tilde = problem.initial_data(epsilon, second)
    # one dt for both families so their difference carries no time-step mismatch
    dt = min(problem.resolved_dt(g), problem.resolved_dt(g_tilde))
    steps = len(step_times(problem.stepper.T, dt)) - 1
    cfg = StepperConfig(
        problem.stepper.T,
        dt,
        problem.stepper.tolerance,
        max(1, steps // _FORCING_SAMPLES),
        problem.stepper.max_iterations,
    )
    trace = solve_homogeneous(L, u0, cfg)
    trace_tilde = solve_homogeneous(L_tilde, u0_tilde, cfg)
    forcing = [l2_norm(L.apply(s) - L_tilde.apply(s)) for s in trace.snapshots]
    return UniquenessPoint(
        epsilon,
        l2_norm(trace.final - trace_tilde.final),
        w1inf_norm(g.field - g_tilde.field),
        l2_norm(u0 - u0_tilde),
        _trapezoid(trace.snapshot_times, forcing),
    )


def run_uniqueness(
    problem: Problem,
    second: Mollifier,
    ladder: EpsilonLadder,
    mapper: Optional[Mapper] = None,
) -> UniquenessReport:
    """Solve with two mollifiers per ladder scale and report how the difference decays.

    The decay is observational: a finite ladder cannot certify decay of all
    orders, so no rate is asserted here.
    """
    run = mapper or _sequential
    points = tuple(run(_uniqueness_point, [(problem, second, eps) for eps in ladder]))
    # differences of two solves on one grid and time grid share the scheme error;
    # only rounding is left as a floor
    norm0 = l2_norm(problem.initial_data(ladder.values[0]))
    noise = NUMERICS.drift_tolerance * max(norm0, 1.0)
    decay = rate_report("difference", [(p.epsilon, p.difference) for p in points], noise)
    coefficient_decay = rate_report(
        "coefficient_difference", [(p.epsilon, p.coefficient_difference) for p in points]
    )
    report = UniquenessReport(
        (problem.mollifier.variant, second.variant), points, decay, coefficient_decay
    )
    logger.info(f"Uniqueness: {report.summary()}")
    return report


# ---------------------------------------------------------------------------
# Consistency


@dataclass(frozen=True)
class ConsistencyPoint:
    epsilon: float
    error: float
    hypothesis: float
    data_error: float
    estimate: float


@dataclass(frozen=True)
class ConsistencyReport:
    points: Tuple[ConsistencyPoint, ...]
    error_rate: RateReport
    hypothesis_rate: RateReport
    data_rate: RateReport
    reference: str
    scheme_error: float

    @property
    def monotone(self) -> bool:
        """Errors non-increasing in eps down to the floor, within the configured tolerance."""
        values = self.error_rate.values
        floored = self.error_rate.floored or (False,) * len(values)
        return all(
            current <= previous * (1.0 + NUMERICS.monotone_tolerance)
            for previous, current, flag in zip(values, values[1:], floored[1:])
            if not flag
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "epsilon": [p.epsilon for p in self.points],
                "error": [p.error for p in self.points],
                "error_floored": self.error_rate.floored or (False,) * len(self.points),
                "hypothesis": [p.hypothesis for p in self.points],
                "data_error": [p.data_error for p in self.points],
                "estimate": [p.estimate for p in self.points],
            }
        )

    def summary(self) -> str:
        return (
            f"{self.error_rate.summary()}; {self.hypothesis_rate.summary()}; "
            f"scheme error {self.scheme_error:.2e} ({self.reference})"
        )


def _consistency_point(
    problem: Problem,
    epsilon: float,
    reference: ComplexField,
    g_classical: np.ndarray,
    u0_classical: np.ndarray,
    gradient_integral: float,
    laplacian_integral: float,
) -> ConsistencyPoint:
    g = problem.regularized(epsilon)
    u0 = problem.initial_data(epsilon)
    trace = solve_homogeneous(assemble_operator(g, problem.staggering), u0, problem.stepper)
    difference = g.field - RealField(g.grid, g_classical)
    sup, grad_sup = w1inf_parts(difference)
    data_error = l2_norm(u0 - ComplexField(g.grid, u0_classical))
    return ConsistencyPoint(
        epsilon,
        l2_norm(trace.final - reference),
        sup + grad_sup,
        data_error,
        data_error + grad_sup * gradient_integral + sup * laplacian_integral,
    )


def run_consistency(
    problem: Problem,
    ladder: EpsilonLadder,
    refinement: int = 2,
    mapper: Optional[Mapper] = None,
) -> ConsistencyReport:
    """Converge mollified solutions to a fine-grid classical reference."""
    if not problem.coefficient.is_regular:
        raise ConsistencyHypothesisError(
            "consistency needs a regular coefficient (g in W^{1,inf}, so that "
            "||g_eps - g||_W1inf -> 0); delta and jump atoms are not admissible"
        )
    g_classical = problem.classical_coefficient()
    u0_classical = problem.classical_data()
    # the reference's coarse solve and every ladder solve share one dt
    fixed = problem.with_stepper(problem.stepper.with_dt(problem.resolved_dt(g_classical)))
    reference = fine_grid_reference(fixed, refinement)
    fine = reference.trace
    assert fine is not None and reference.coarse_discrepancy is not None
    gradient_integral = _trapezoid(fine.times, fine.h1)
    laplacian = np.asarray(fine.h2) - np.asarray(fine.l2) - np.asarray(fine.h1)
    laplacian_integral = _trapezoid(fine.times, laplacian)

    run = mapper or _sequential
    points = tuple(
        run(
            _consistency_point,
            [
                (
                    fixed,
                    eps,
                    reference.field,
                    g_classical.field.values,
                    u0_classical.values,
                    gradient_integral,
                    laplacian_integral,
                )
                for eps in ladder
            ],
        )
    )
    scheme_error = reference.coarse_discrepancy
    report = ConsistencyReport(
        points,
        rate_report("error", [(p.epsilon, p.error) for p in points], scheme_error),
        rate_report("hypothesis", [(p.epsilon, p.hypothesis) for p in points]),
        rate_report("data_error", [(p.epsilon, p.data_error) for p in points]),
        f"fine_grid x{refinement}",
        scheme_error,
    )
    logger.info(f"Consistency: {report.summary()}")
    return report


# ---------------------------------------------------------------------------
# Duhamel


@dataclass(frozen=True)
class DuhamelReport:
    """Duhamel composition against the direct difference of two solves.

    ``discrepancies`` are relative L2 discrepancies at T, one per time step
    in ``dts`` (the first is the configured resolution).
    """

    epsilon: float
    dts: Tuple[float, ...]
    discrepancies: Tuple[float, ...]
    absolute: Tuple[float, ...]
    slope: float
    residual: float
    strategy: str = "accumulated"

    @property
    def discrepancy(self) -> float:
        return self.discrepancies[0]

    @property
    def identical(self) -> bool:
        return all(a == 0.0 for a in self.absolute)

    @property
    def passed(self) -> bool:
        if self.identical:
            return True
        converges = math.isnan(self.slope) or self.slope <= -NUMERICS.min_refinement_order
        return self.discrepancy <= NUMERICS.duhamel_tolerance and converges

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"dt": self.dts, "discrepancy": self.discrepancies, "absolute": self.absolute}
        )

    def summary(self) -> str:
        if self.identical:
            return "identical mollifiers: both sides vanish"
        return (
            f"discrepancy {self.discrepancy:.2e} at dt={self.dts[0]:.3g}, "
            f"dt-refinement slope {-self.slope:.2f}"
        )


def _duhamel_point(problem: Problem, second: Mollifier, epsilon: float, dt: float, strategy: str) -> Tuple[float, float]:
    L = problem.operator(epsilon)
    L_tilde = problem.operator(epsilon, second)
    u0 = problem.initial_data(epsilon)
    u0_tilde = problem.initial_data(epsilon, second)
    stepper = problem.stepper
    cfg = StepperConfig(stepper.T, dt, stepper.tolerance, 1, stepper.max_iterations)
    trace = solve_homogeneous(L, u0, cfg)
    trace_tilde = solve_homogeneous(L_tilde, u0_tilde, cfg)
    direct = trace.final - trace_tilde.final

    # U = u - u~ solves i U_t + L~ U = -(L - L~) u
    source = SourceTerm.from_trace(trace, lambda s: L_tilde.apply(s) - L.apply(s))
    composed = duhamel_compose(L_tilde, u0 - u0_tilde, source, cfg, strategy)
    absolute = l2_norm(composed.final - direct)
    scale = l2_norm(direct)
    return absolute, (absolute / scale if scale > 0 else 0.0)


def run_duhamel_check(
    problem: Problem,
    second: Mollifier,
    epsilon: float,
    halvings: int = 3,
    strategy: str = "accumulated",
    mapper: Optional[Mapper] = None,
) -> DuhamelReport:
    """Compare U = u_eps - u~_eps with its Duhamel representation under dt-refinement."""
    g = problem.regularized(epsilon)
    dt = problem.resolved_dt(g)
    dts = tuple(dt / 2**k for k in range(halvings + 1))
    run = mapper or _sequential
    results = run(_duhamel_point, [(problem, second, epsilon, step, strategy) for step in dts])
    absolute = tuple(r[0] for r in results)
    relative = tuple(r[1] for r in results)
    slope = residual = float("nan")
    if all(a > 0 for a in absolute) and len(dts) >= NUMERICS.min_fit_points:
        slope, residual = fit_rate(list(zip(dts, absolute)))
    report = DuhamelReport(epsilon, dts, relative, absolute, slope, residual, strategy)
    logger.info(f"Duhamel at eps={epsilon:g}: {report.summary()}")
    return report


# ---------------------------------------------------------------------------
# H2 a-priori bound


@dataclass(frozen=True)
class H2BoundCase:
    label: str
    problem: Problem
    epsilon: float


@dataclass(frozen=True)
class H2BoundRow:
    label: str
    n: int
    epsilon: float
    sup_h2: float
    initial_h2: float
    w1inf: float

    @property
    def ratio(self) -> float:
        """sup_t ||u||_H2 / ((1 + ||g_eps||_W1inf) ||u0||_H2)."""
        return self.sup_h2 / ((1.0 + self.w1inf) * self.initial_h2)


@dataclass(frozen=True)
class H2BoundReport:
    rows: Tuple[H2BoundRow, ...]
    constant: float = field(default_factory=lambda: NUMERICS.h2_bound_constant)

    @property
    def max_ratio(self) -> float:
        return max(row.ratio for row in self.rows)

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.constant

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "label": [r.label for r in self.rows],
                "n": [r.n for r in self.rows],
                "epsilon": [r.epsilon for r in self.rows],
                "sup_h2": [r.sup_h2 for r in self.rows],
                "initial_h2": [r.initial_h2 for r in self.rows],
                "w1inf": [r.w1inf for r in self.rows],
                "ratio": [r.ratio for r in self.rows],
            }
        )

    def summary(self) -> str:
        return f"max ratio {self.max_ratio:.3f} against K={self.constant:g} over {len(self.rows)} cases"


def _h2_bound_point(case: H2BoundCase) -> H2BoundRow:
    problem, epsilon = case.problem, case.epsilon
    g = problem.regularized(epsilon)
    u0 = problem.initial_data(epsilon)
    trace = solve_homogeneous(
        assemble_operator(g, problem.staggering), u0, problem.stepper.with_dt(problem.resolved_dt(g))
    )
    return H2BoundRow(case.label, problem.grid.n, epsilon, trace.sup_h2, h2_norm(u0), g.w1inf)


def h2_bound_matrix(
    problems: Dict[str, Problem], sizes: Sequence[int], epsilons: Sequence[float]
) -> List[H2BoundCase]:
    """Every labelled problem on every grid size at every scale."""
    cases = []
    for label, problem in problems.items():
        for n in sizes:
            grid = Grid(problem.grid.d, problem.grid.half_width, n)
            for eps in epsilons:
                cases.append(H2BoundCase(label, problem.on_grid(grid), eps))
    return cases


def run_h2_bound(cases: Sequence[H2BoundCase], mapper: Optional[Mapper] = None) -> H2BoundReport:
    """Check sup_t ||u_eps||_H2 <= K (1 + ||g_eps||_W1inf) ||u0_eps||_H2 across the matrix."""
    run = mapper or _sequential
    rows = tuple(run(_h2_bound_point, [(case,) for case in cases]))
    report = H2BoundReport(rows)
    if not report.passed:
        logger.error(f"H2 bound exceeded: {report.summary()}")
    else:
        logger.info(f"H2 bound: {report.summary()}")
    return report


# ---------------------------------------------------------------------------
# u_t shift


def _shift_error(problem: Problem, epsilon: float, dt: float) -> float:
    g = problem.regularized(epsilon)
    L = assemble_operator(g, problem.staggering)
    u0 = problem.initial_data(epsilon)
    steps = int(round(problem.stepper.T / dt))
    if abs(steps * dt - problem.stepper.T) > 1e-9 * problem.stepper.T:
        raise ValueError(f"T={problem.stepper.T} is not a multiple of dt={dt}")
    tol, iters = problem.stepper.tolerance, problem.stepper.max_iterations
    u = u0
    for _ in range(steps - 1):
        u = step_cn(L, u, dt, tol, iters)
    before = u
    at_T = step_cn(L, before, dt, tol, iters)
    after = step_cn(L, at_T, dt, tol, iters)
    centered = (after - before) * (1.0 / (2.0 * dt))

    w0 = time_derivative_data(g, u0, problem.staggering)
    w = solve_homogeneous(L, w0, StepperConfig(problem.stepper.T, dt, tol, 0, iters)).final
    scale = l2_norm(w) or 1.0
    return l2_norm(w - centered) / scale


def shift_time_steps(problem: Problem, epsilon: float, halvings: int = 3) -> Tuple[float, ...]:
    """A fraction of the automatic step at ``epsilon``, shortened to divide T, then halved.

    Every mode the data populates then satisfies (dt/2)|lambda| < 1, where the
    Cayley symbol error is second order.
    """
    if halvings < 1:
        raise ValueError(f"halvings must be positive, got {halvings}")
    T = problem.stepper.T
    auto = default_time_step(problem.regularized(epsilon))
    steps = math.ceil(T / (NUMERICS.shift_step_fraction * auto))
    return tuple(T / (steps * 2**k) for k in range(halvings + 1))


def run_time_derivative(
    problem: Problem,
    epsilon: float,
    dts: Optional[Sequence[float]] = None,
    mapper: Optional[Mapper] = None,
    halvings: int = 3,
) -> RateReport:
    """Evolve w0 = i L u0 and compare with the centered time difference of u at T.

    The discrepancy is a pure time-discretization error on a fixed grid;
    its exponent under dt-refinement is negative (decay). Without ``dts`` the
    ladder comes from :func:`shift_time_steps`. Steps much longer than the
    automatic one leave the stiff modes outside the asymptotic regime and
    flatten the slope.
    """
    if dts is None:
        dts = shift_time_steps(problem, epsilon, halvings)
    run = mapper or _sequential
    errors = run(_shift_error, [(problem, epsilon, dt) for dt in dts])
    report = rate_report("shift_error", list(zip(dts, errors)))
    logger.info(f"u_t shift at eps={epsilon:g}: {report.summary()}")
    return report
