"""A complete Cauchy problem description: coefficient, data, grid and stepping."""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional

from ..config import StepperConfig
from .coefficients import (
    CoefficientSpec,
    DataSpec,
    Mollifier,
    RegularizedCoefficient,
    make_mollifier,
    regularize,
    regularize_data,
    sample_coefficient,
    sample_data,
)
from .evolution import SpatialOperator, assemble_operator, default_time_step
from .grid_field import ComplexField, Grid


@dataclass(frozen=True)
class Problem:
    coefficient: CoefficientSpec
    data: DataSpec
    grid: Grid
    stepper: StepperConfig
    mollifier: Mollifier = field(default_factory=lambda: make_mollifier("bump"))
    staggering: str = "arithmetic"

    def regularized(self, epsilon: float, mollifier: Optional[Mollifier] = None) -> RegularizedCoefficient:
        return regularize(self.coefficient, mollifier or self.mollifier, epsilon, self.grid)

    def initial_data(self, epsilon: float, mollifier: Optional[Mollifier] = None) -> ComplexField:
        return regularize_data(self.data, mollifier or self.mollifier, epsilon, self.grid)

    def operator(self, epsilon: float, mollifier: Optional[Mollifier] = None) -> SpatialOperator:
        return assemble_operator(self.regularized(epsilon, mollifier), self.staggering)

    def classical_coefficient(self) -> RegularizedCoefficient:
        return sample_coefficient(self.coefficient, self.grid)

    def classical_data(self) -> ComplexField:
        return sample_data(self.data, self.grid)

    def on_grid(self, grid: Grid) -> "Problem":
        return replace(self, grid=grid)

    def with_stepper(self, stepper: StepperConfig) -> "Problem":
        return replace(self, stepper=stepper)

    def resolved_dt(self, coefficient: RegularizedCoefficient) -> float:
        """The configured dt, or the automatic one for ``coefficient``."""
        if self.stepper.dt is not None:
            return min(self.stepper.dt, self.stepper.T)
        return min(default_time_step(coefficient), self.stepper.T)

    def describe(self) -> Dict[str, Any]:
        from .spec_text import format_data_spec

        try:
            coefficient_text = self.coefficient.to_text()
        except ValueError:
            coefficient_text = "<sampled>"
        try:
            data_text = format_data_spec(self.data)
        except ValueError:
            data_text = "<sampled>"
        return {
            "coefficient": coefficient_text,
            "data": data_text,
            "grid": {"d": self.grid.d, "half_width": self.grid.half_width, "n": self.grid.n},
            "mollifier": self.mollifier.variant,
            "staggering": self.staggering,
            "stepper": {
                "T": self.stepper.T,
                "dt": self.stepper.dt,
                "tolerance": self.stepper.tolerance,
            },
        }
