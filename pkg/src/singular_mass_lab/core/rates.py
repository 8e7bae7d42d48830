"""Log-log rate fits over epsilon ladders, with scheme-error floor detection."""

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import NUMERICS
from ..errors import RateFitError

logger = logging.getLogger(__name__)

Pairs = Sequence[Tuple[float, float]]


def _fit_line(pairs: Pairs) -> Tuple[float, float, float]:
    if len(pairs) < NUMERICS.min_fit_points:
        raise RateFitError(
            f"need at least {NUMERICS.min_fit_points} ladder points to fit a rate, got {len(pairs)}"
        )
    eps = np.array([p[0] for p in pairs], dtype=float)
    values = np.array([p[1] for p in pairs], dtype=float)
    if np.any(eps <= 0):
        raise RateFitError(f"ladder scales must be positive: {eps.tolist()}")
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise RateFitError(f"rate fits need positive finite values: {values.tolist()}")
    x = np.log(1.0 / eps)
    y = np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), residual


def fit_rate(pairs: Pairs) -> Tuple[float, float]:
    """Least-squares slope of log(value) against log(1/eps), and the RMS residual.

    Positive exponents mean growth like eps^-p, negative ones decay.
    """
    slope, _, residual = _fit_line(pairs)
    return slope, residual


def floored_points(values: Sequence[float], scheme_error: Optional[float], factor: Optional[float] = None) -> Tuple[bool, ...]:
    """Flag ladder points whose change from the previous point is within the scheme error.

    A point is kept while |v_{k-1} - v_k| > factor * scheme_error; the first
    point that fails, and everything finer, is floored.
    """
    if scheme_error is None:
        return (False,) * len(values)
    factor = NUMERICS.floor_factor if factor is None else factor
    flags = [False]
    for previous, current in zip(values, values[1:]):
        floored = flags[-1] or abs(previous - current) <= factor * scheme_error
        flags.append(floored)
    return tuple(flags)


@dataclass(frozen=True)
class RateReport:
    """A fitted ladder. ``exponent`` is nan when too few points survive the floor."""

    quantity: str
    epsilons: Tuple[float, ...]
    values: Tuple[float, ...]
    exponent: float
    residual: float
    intercept: float = float("nan")
    floored: Tuple[bool, ...] = ()
    scheme_error: Optional[float] = None
    note: str = ""

    @property
    def direction(self) -> str:
        return "decay" if self.exponent < 0 else "growth"

    @property
    def pairs(self) -> Tuple[Tuple[float, float], ...]:
        return tuple(zip(self.epsilons, self.values))

    @property
    def fitted(self) -> bool:
        return not math.isnan(self.exponent)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "epsilon": self.epsilons,
                self.quantity: self.values,
                f"{self.quantity}_floored": self.floored or (False,) * len(self.values),
            }
        )

    def summary(self) -> str:
        if not self.fitted:
            return f"{self.quantity}: no fit ({self.note})"
        return f"{self.quantity} exponent {self.exponent:+.3f} (residual {self.residual:.2e})"


def rate_report(
    quantity: str,
    pairs: Pairs,
    scheme_error: Optional[float] = None,
) -> RateReport:
    """Fit a ladder after excluding floored points; identically zero ladders are reported, not fitted."""
    epsilons = tuple(float(p[0]) for p in pairs)
    values = tuple(float(p[1]) for p in pairs)
    floored = floored_points(values, scheme_error)
    kept = [(e, v) for e, v, f in zip(epsilons, values, floored) if not f]
    nan = float("nan")
    if all(v == 0.0 for v in values):
        return RateReport(quantity, epsilons, values, nan, nan, nan, floored, scheme_error, "identically zero")
    if len(kept) < NUMERICS.min_fit_points:
        note = f"only {len(kept)} point(s) above the scheme-error floor"
        logger.warning(f"{quantity}: {note}; exponent not fitted")
        return RateReport(quantity, epsilons, values, nan, nan, nan, floored, scheme_error, note)
    try:
        slope, intercept, residual = _fit_line(kept)
    except RateFitError as e:
        logger.warning(f"{quantity}: {e}")
        return RateReport(quantity, epsilons, values, nan, nan, nan, floored, scheme_error, str(e))
    report = RateReport(quantity, epsilons, values, slope, residual, intercept, floored, scheme_error)
    logger.debug(report.summary())
    return report


def dominant_exponent(components: Mapping[str, RateReport]) -> Tuple[float, str]:
    """Largest fitted exponent among the components of a sum; identically zero parts are skipped.

    For a sum of powers the growth rate is that of its fastest term, which a
    plain fit of the sum underestimates while constant offsets dominate.
    """
    fitted = [(report.exponent, name) for name, report in components.items() if report.fitted]
    if not fitted:
        return float("nan"), ""
    return max(fitted)
