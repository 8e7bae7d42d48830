"""CLI mode execution."""

import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from .. import __version__
from ..core.coefficients import make_mollifier
from ..core.experiments import (
    h2_bound_matrix,
    run_consistency,
    run_duhamel_check,
    run_energy,
    run_h2_bound,
    run_moderateness,
    run_uniqueness,
)
from ..core.problem import Problem
from ..core.report_writer import write_field_csv, write_report
from ..config import NUMERICS
from ..errors import ResolutionError, SingularMassLabError
from ..worker import LadderWorkerPool
from .config import ExperimentConfig, to_toml
from .progress import STATUS_FAILED, STATUS_OK, STATUS_VIOLATED, CampaignOutcome, CLIProgressReporter

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVARIANT = 1


class _Context:
    """What every campaign needs: the problem, the pool and the metadata."""

    def __init__(self, config: ExperimentConfig, pool: LadderWorkerPool):
        self.config = config
        self.pool = pool
        self.problem: Problem = config.problem()
        self.second = make_mollifier(config.second_mollifier, config.grid.d)
        self.out = config.output_dir

    def metadata(self, campaign: str, **extra: Any) -> Dict[str, Any]:
        meta = {
            "campaign": campaign,
            "version": __version__,
            "seed": self.config.seed,
            "config": self.config.to_dict(),
            "config_toml": to_toml(self.config),
            "problem": self.problem.describe(),
        }
        if self.config.source is not None:
            meta["config_path"] = str(self.config.source)
        meta.update(extra)
        return meta


# each campaign returns (invariant holds, summary, files written)
CampaignResult = Tuple[bool, str, List[Path]]


def _energy(ctx: _Context) -> CampaignResult:
    eps = ctx.config.epsilon
    ledger = run_energy(ctx.problem, eps)
    trace = ledger.trace
    # strided snapshots, one field file per recorded step
    snapshots: List[Dict[str, Any]] = []
    if ctx.problem.stepper.snapshot_stride:
        snapshots = [
            {"step": step, "t": t, "file": f"energy_snapshot_{step:06d}.csv"}
            for step, t in zip(trace.snapshot_steps, trace.snapshot_times)
        ]
    files = write_report(
        ledger.to_frame(),
        ctx.out / "energy",
        ctx.metadata(
            "energy",
            epsilon=eps,
            resolved_dt=ledger.dt,
            max_drift=ledger.max_drift,
            energy_form_drift=ledger.energy_form_drift,
            operator_check=vars(ledger.operator_check),
            snapshots=snapshots,
        ),
    )
    files.append(write_field_csv(trace.final, ctx.out / "energy_final.csv"))
    for entry, field in zip(snapshots, trace.snapshots):
        files.append(write_field_csv(field, ctx.out / entry["file"]))
    return ledger.passed, ledger.summary(), files


def _moderateness(ctx: _Context) -> CampaignResult:
    cfg = ctx.config
    report = run_moderateness(
        ctx.problem.coefficient,
        ctx.problem.mollifier,
        cfg.ladder,
        cfg.grid,
        problem=ctx.problem,
        solution_side=cfg.solution_exponent,
        mapper=ctx.pool,
    )
    rates = [report.coefficient, *report.components.values()]
    rates += [r for r in (report.data, report.solution) if r is not None]
    files = write_report(
        report.to_frame(),
        ctx.out / "moderateness",
        ctx.metadata(
            "moderateness",
            exponent=report.exponent,
            raw_exponent=report.raw_exponent,
            bound_exponent=report.bound_exponent,
            positivity=report.positivity,
        ),
        rates,
        cfg.plots,
    )
    return True, report.summary(), files


def _uniqueness(ctx: _Context) -> CampaignResult:
    cfg = ctx.config
    report = run_uniqueness(ctx.problem, ctx.second, cfg.ladder, mapper=ctx.pool)
    files = write_report(
        report.to_frame(),
        ctx.out / "uniqueness",
        ctx.metadata(
            "uniqueness",
            mollifiers=list(report.mollifiers),
            exponent=report.decay.exponent,
            note=report.decay.note,
        ),
        [report.decay, report.coefficient_decay],
        cfg.plots,
    )
    return True, report.summary(), files


def _consistency(ctx: _Context) -> CampaignResult:
    cfg = ctx.config
    report = run_consistency(ctx.problem, cfg.ladder, cfg.refinement, mapper=ctx.pool)
    files = write_report(
        report.to_frame(),
        ctx.out / "consistency",
        ctx.metadata(
            "consistency",
            reference=report.reference,
            scheme_error=report.scheme_error,
            monotone=report.monotone,
            resolved_dt=ctx.problem.resolved_dt(ctx.problem.classical_coefficient()),
        ),
        [report.error_rate, report.hypothesis_rate, report.data_rate],
        cfg.plots,
    )
    return True, report.summary() + ("" if report.monotone else " (not monotone)"), files


def _duhamel(ctx: _Context) -> CampaignResult:
    cfg = ctx.config
    report = run_duhamel_check(
        ctx.problem, ctx.second, cfg.epsilon, cfg.halvings, cfg.duhamel_strategy, mapper=ctx.pool
    )
    files = write_report(
        report.to_frame(),
        ctx.out / "duhamel",
        ctx.metadata(
            "duhamel",
            epsilon=cfg.epsilon,
            resolved_dt=report.dts[0],
            slope=report.slope,
            strategy=report.strategy,
        ),
    )
    return report.passed, report.summary(), files


def _h2bound(ctx: _Context) -> CampaignResult:
    cfg = ctx.config
    sizes = [cfg.grid.n // 4, cfg.grid.n // 2, cfg.grid.n]
    coarsest = sizes[0]
    limit = NUMERICS.resolution_factor * 2.0 * cfg.grid.half_width / coarsest
    epsilons = [eps for eps in cfg.ladder if eps >= limit * (1 - 1e-12)][:4]
    if not epsilons:
        raise ResolutionError(f"no ladder scale is resolved on n={coarsest} (needs eps >= {limit:g})")
    report = run_h2_bound(
        h2_bound_matrix({"config": ctx.problem}, sizes, epsilons), mapper=ctx.pool
    )
    files = write_report(
        report.to_frame(),
        ctx.out / "h2bound",
        ctx.metadata("h2bound", constant=report.constant, max_ratio=report.max_ratio),
    )
    return report.passed, report.summary(), files


CAMPAIGN_RUNNERS: Dict[str, Callable[[_Context], CampaignResult]] = {
    "energy": _energy,
    "moderateness": _moderateness,
    "uniqueness": _uniqueness,
    "consistency": _consistency,
    "duhamel": _duhamel,
    "h2bound": _h2bound,
}


def run_campaign(ctx: _Context, name: str) -> CampaignOutcome:
    """Run one campaign; exceptions abort it and are recorded, never raised."""
    try:
        holds, summary, files = CAMPAIGN_RUNNERS[name](ctx)
    except KeyboardInterrupt:
        raise
    except SingularMassLabError as e:
        logger.error(f"Campaign {name} aborted: {e}")
        return CampaignOutcome(name, STATUS_FAILED, str(e))
    except Exception as e:
        logger.error(f"Unexpected error in campaign {name}: {e}", exc_info=True)
        return CampaignOutcome(name, STATUS_FAILED, f"{type(e).__name__}: {e}")
    return CampaignOutcome(name, STATUS_OK if holds else STATUS_VIOLATED, summary, files)


def run(config: ExperimentConfig, reporter: Optional[CLIProgressReporter] = None) -> int:
    """
    Run the campaigns the config selects and write their reports.

    Args:
        config: Validated experiment configuration

    Returns:
        0 when every campaign finished with its invariants intact. 1 when an
        invariant is violated, or when a campaign aborts and so certifies
        nothing. 130 when interrupted.
    """
    reporter = reporter or CLIProgressReporter()
    campaigns = config.campaigns()
    logger.info(f"Running {', '.join(campaigns)} into {config.output_dir}")
    try:
        config.output_dir.mkdir(parents=True, exist_ok=True)
        with LadderWorkerPool(config.jobs) as pool:
            ctx = _Context(config, pool)
            for name in campaigns:
                reporter.on_campaign_started(name)
                reporter.on_campaign_finished(run_campaign(ctx, name))
    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        return 130
    except OSError as e:
        logger.error(f"Failed to write reports: {e}")
        return EXIT_INVARIANT
    except Exception as e:
        logger.error(f"Unexpected error in CLI mode: {e}", exc_info=True)
        return EXIT_INVARIANT

    reporter.print_summary(config.output_dir)
    if all(outcome.succeeded for outcome in reporter.outcomes):
        return EXIT_OK
    return EXIT_INVARIANT
