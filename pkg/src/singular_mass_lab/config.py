"""Configuration dataclasses for the singular mass laboratory."""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

logger = logging.getLogger(__name__)

CAMPAIGNS = (
    "energy",
    "moderateness",
    "uniqueness",
    "consistency",
    "duhamel",
    "h2bound",
)
STAGGERINGS = ("arithmetic", "harmonic")


@dataclass(frozen=True)
class StepperConfig:
    """Time stepping parameters for one evolution run.

    ``dt=None`` means "auto": the evolution module resolves it from the
    coefficient with :func:`~singular_mass_lab.core.evolution.default_time_step`.
    """

    T: float
    dt: Optional[float] = None
    tolerance: float = 1e-10
    snapshot_stride: int = 0
    max_iterations: int = 2000

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"final time T must be positive, got {self.T}")
        if self.dt is not None and not (0 < self.dt <= self.T):
            raise ValueError(f"time step must satisfy 0 < dt <= T, got dt={self.dt}")
        if not (0 < self.tolerance <= 1e-6):
            raise ValueError(
                f"solver tolerance must lie in (0, 1e-6], got {self.tolerance}"
            )
        if self.snapshot_stride < 0:
            raise ValueError("snapshot stride must be non-negative")
        logger.debug(f"StepperConfig validated: {self}")

    def with_dt(self, dt: float) -> "StepperConfig":
        """Copy with an explicit time step (clamped to T)."""
        return replace(self, dt=min(dt, self.T))


@dataclass(frozen=True)
class NumericsSettings:
    """Discretization constants and pinned regression bounds."""

    simpson_nodes_1d: int = 129
    simpson_nodes_2d: int = 33
    # ε must be at least this many grid spacings
    resolution_factor: float = 2.0
    dense_max_unknowns: int = 256
    fine_grid_max_unknowns: int = 1 << 22
    drift_tolerance: float = 1e-10
    energy_form_tolerance: float = 1e-8
    hermitian_tolerance: float = 1e-12
    # sup_t ||u||_H2 <= K (1 + ||g||_W1inf) ||u0||_H2, calibrated on the h2bound matrix
    h2_bound_constant: float = 1.0
    # relative discrepancy of the Duhamel composition at the default resolution
    duhamel_tolerance: float = 1e-3
    min_refinement_order: float = 1.8
    # first step of the u_t shift ladder, as a fraction of the automatic step
    shift_step_fraction: float = 0.25
    floor_factor: float = 3.0
    monotone_tolerance: float = 0.10
    min_fit_points: int = 4
    operator_check_samples: int = 20


NUMERICS = NumericsSettings()
