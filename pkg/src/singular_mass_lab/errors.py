"""Exception hierarchy for the singular mass laboratory."""

from typing import Optional


class SingularMassLabError(Exception):
    """Base class for every error raised by this package."""


class GridError(SingularMassLabError, ValueError):
    """Invalid grid parameters or fields living on mismatched grids."""


class CoefficientError(SingularMassLabError, ValueError):
    """Coefficient or data specification that violates its invariants."""


class SpecSyntaxError(SingularMassLabError, ValueError):
    """Text form of a coefficient or data spec that cannot be parsed."""

    def __init__(self, message: str, text: str, position: Optional[int] = None):
        self.text = text
        self.position = position
        where = f" at column {position + 1}" if position is not None else ""
        super().__init__(f"{message}{where}: {text!r}")


class ResolutionError(SingularMassLabError, ValueError):
    """A regularization scale the grid cannot resolve."""


class SolverError(SingularMassLabError, RuntimeError):
    """Linear solve inside a time step failed to reach its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"{message} (residual {residual:.3e} after {iterations} iterations)"
        )


class OracleBudgetError(SingularMassLabError, RuntimeError):
    """A reference computation would exceed its size budget."""


class RateFitError(SingularMassLabError, ValueError):
    """A ladder that cannot be fitted (too few points, nonpositive values)."""


class ConsistencyHypothesisError(SingularMassLabError, ValueError):
    """A singular coefficient handed to the consistency campaign."""


class ConfigError(SingularMassLabError, ValueError):
    """Experiment document that fails to parse or validate."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        prefix = f"{key}: " if key else ""
        super().__init__(f"{prefix}{message}")
