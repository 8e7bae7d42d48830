"""Experiment documents: TOML in, validated ExperimentConfig out, and back."""

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from types import ModuleType
from typing import Any, Dict, List, Optional, Tuple

from ..config import CAMPAIGNS, NUMERICS, STAGGERINGS, StepperConfig
from ..core.coefficients import (
    MOLLIFIER_VARIANTS,
    CoefficientSpec,
    DataSpec,
    EpsilonLadder,
    make_mollifier,
)
from ..core.evolution import DUHAMEL_STRATEGIES
from ..core.grid_field import Grid, build_grid
from ..core.problem import Problem
from ..core.spec_text import parse_coefficient_spec, parse_data_spec
from ..errors import ConfigError, SingularMassLabError

tomllib: Optional[ModuleType] = None
try:
    import tomllib  # type: ignore[import-not-found,no-redef]
except ImportError:
    try:
        import tomli as tomllib  # type: ignore[import-not-found,no-redef]
    except ImportError:
        pass

logger = logging.getLogger(__name__)

ALL_CAMPAIGNS = "all"
# campaigns that regularize along the whole ladder
LADDER_CAMPAIGNS = ("moderateness", "uniqueness", "consistency")

_SECTIONS: Dict[str, Tuple[str, ...]] = {
    "grid": ("d", "half_width", "n"),
    "coefficient": ("spec",),
    "data": ("spec",),
    "mollifier": ("variant", "second_variant"),
    "ladder": ("eps0", "ratio", "count"),
    "stepper": ("dt", "T", "tolerance", "snapshot_stride", "staggering", "max_iterations"),
    "campaign": ("name", "epsilon", "refinement", "solution_exponent", "duhamel_strategy", "halvings"),
    "output": ("dir", "plots", "jobs", "seed"),
}
DEFAULT_DATA = "gaussian(center=0.0, a=1.0, k0=0.0)"


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment document with every default materialized."""

    grid: Grid
    coefficient_text: str
    coefficient: CoefficientSpec = field(compare=False)
    data_text: str = DEFAULT_DATA
    data: Optional[DataSpec] = field(default=None, compare=False)
    mollifier: str = "bump"
    second_mollifier: str = "polynomial"
    eps0: float = 0.5
    ratio: float = 0.5
    count: int = 5
    stepper: StepperConfig = field(default_factory=lambda: StepperConfig(T=1.0))
    staggering: str = "arithmetic"
    campaign: str = ALL_CAMPAIGNS
    epsilon: float = 0.03125
    refinement: int = 2
    solution_exponent: bool = False
    duhamel_strategy: str = "accumulated"
    halvings: int = 3
    output_dir: Path = Path("reports")
    plots: bool = False
    jobs: int = 0
    seed: int = 0
    source: Optional[Path] = field(default=None, compare=False)

    @property
    def ladder(self) -> EpsilonLadder:
        return EpsilonLadder.geometric(self.eps0, self.ratio, self.count)

    def campaigns(self) -> List[str]:
        """Campaigns this document selects, in run order."""
        if self.campaign != ALL_CAMPAIGNS:
            return [self.campaign]
        selected = list(CAMPAIGNS)
        if not self.coefficient.is_regular:
            selected.remove("consistency")
        return selected

    def problem(self) -> Problem:
        assert self.data is not None
        return Problem(
            self.coefficient,
            self.data,
            self.grid,
            self.stepper,
            make_mollifier(self.mollifier, self.grid.d),
            self.staggering,
        )

    def with_overrides(
        self,
        campaign: Optional[str] = None,
        output_dir: Optional[Path] = None,
        jobs: Optional[int] = None,
    ) -> "ExperimentConfig":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        if campaign is not None:
            values["campaign"] = campaign
        if output_dir is not None:
            values["output_dir"] = output_dir
        if jobs is not None:
            values["jobs"] = jobs
        config = ExperimentConfig(**values)
        _check_campaign(config)
        return config

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid": {"d": self.grid.d, "half_width": self.grid.half_width, "n": self.grid.n},
            "coefficient": {"spec": self.coefficient_text},
            "data": {"spec": self.data_text},
            "mollifier": {"variant": self.mollifier, "second_variant": self.second_mollifier},
            "ladder": {"eps0": self.eps0, "ratio": self.ratio, "count": self.count},
            "stepper": {
                "dt": "auto" if self.stepper.dt is None else self.stepper.dt,
                "T": self.stepper.T,
                "tolerance": self.stepper.tolerance,
                "snapshot_stride": self.stepper.snapshot_stride,
                "staggering": self.staggering,
                "max_iterations": self.stepper.max_iterations,
            },
            "campaign": {
                "name": self.campaign,
                "epsilon": self.epsilon,
                "refinement": self.refinement,
                "solution_exponent": self.solution_exponent,
                "duhamel_strategy": self.duhamel_strategy,
                "halvings": self.halvings,
            },
            "output": {
                "dir": str(self.output_dir),
                "plots": self.plots,
                "jobs": self.jobs,
                "seed": self.seed,
            },
        }


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    return json.dumps(str(value))


def to_toml(config: ExperimentConfig) -> str:
    """Emit the document that parses back to ``config``."""
    lines = ["# singular-mass-lab experiment", ""]
    for section, values in config.to_dict().items():
        lines.append(f"[{section}]")
        for key, value in values.items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


class _Reader:
    """Typed access to one section, raising ConfigError with the key path."""

    def __init__(self, document: Dict[str, Any], section: str):
        raw = document.get(section, {})
        if not isinstance(raw, dict):
            raise ConfigError("must be a table", key=section)
        unknown = sorted(set(raw) - set(_SECTIONS[section]))
        if unknown:
            raise ConfigError(
                f"unknown key(s) {', '.join(unknown)}; allowed: {', '.join(_SECTIONS[section])}",
                key=section,
            )
        self.section = section
        self.raw = raw

    def key(self, name: str) -> str:
        return f"{self.section}.{name}"

    def has(self, name: str) -> bool:
        return name in self.raw

    def number(self, name: str, default: Optional[float] = None) -> float:
        if name not in self.raw:
            if default is None:
                raise ConfigError("is required", key=self.key(name))
            return default
        value = self.raw[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"must be a number, got {value!r}", key=self.key(name))
        return float(value)

    def integer(self, name: str, default: Optional[int] = None) -> int:
        if name not in self.raw:
            if default is None:
                raise ConfigError("is required", key=self.key(name))
            return default
        value = self.raw[name]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"must be an integer, got {value!r}", key=self.key(name))
        return value

    def text(self, name: str, default: Optional[str] = None, choices: Optional[Tuple[str, ...]] = None) -> str:
        if name not in self.raw:
            if default is None:
                raise ConfigError("is required", key=self.key(name))
            return default
        value = self.raw[name]
        if not isinstance(value, str):
            raise ConfigError(f"must be a string, got {value!r}", key=self.key(name))
        if choices is not None and value not in choices:
            raise ConfigError(f"must be one of {', '.join(choices)}, got {value!r}", key=self.key(name))
        return value

    def flag(self, name: str, default: bool) -> bool:
        value = self.raw.get(name, default)
        if not isinstance(value, bool):
            raise ConfigError(f"must be true or false, got {value!r}", key=self.key(name))
        return value


def _check_campaign(config: ExperimentConfig) -> None:
    if config.campaign not in CAMPAIGNS + (ALL_CAMPAIGNS,):
        raise ConfigError(
            f"unknown campaign {config.campaign!r}; known: {', '.join(CAMPAIGNS + (ALL_CAMPAIGNS,))}",
            key="campaign.name",
        )
    if config.campaign == "consistency" and not config.coefficient.is_regular:
        raise ConfigError(
            "the consistency campaign needs a regular coefficient (g in W^{1,inf}); "
            "remove delta and jump atoms",
            key="coefficient.spec",
        )
    selected = config.campaigns()
    limit = NUMERICS.resolution_factor * config.grid.h
    if any(c in LADDER_CAMPAIGNS for c in selected) and config.ladder.smallest < limit * (1 - 1e-12):
        raise ConfigError(
            f"smallest scale {config.ladder.smallest:g} is below {NUMERICS.resolution_factor:g}h = {limit:g}; "
            "refine the grid or shorten the ladder",
            key="ladder",
        )


def parse_config_text(text: str, base_dir: Optional[Path] = None, source: Optional[Path] = None) -> ExperimentConfig:
    """Validate an experiment document given as TOML text."""
    if tomllib is None:
        raise ConfigError("tomllib not available - install tomli for Python < 3.11")
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        line = re.search(r"line (\d+)", str(e))
        where = f" (line {line.group(1)})" if line else ""
        raise ConfigError(f"TOML syntax error{where}: {e}") from e

    unknown = sorted(set(document) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s) {', '.join(unknown)}; allowed: {', '.join(_SECTIONS)}")
    if "grid" not in document:
        raise ConfigError("section is required", key="grid")
    if "coefficient" not in document:
        raise ConfigError("section is required", key="coefficient")

    sections = {name: _Reader(document, name) for name in _SECTIONS}
    grid_s, stepper_s, campaign_s, output_s = (
        sections["grid"],
        sections["stepper"],
        sections["campaign"],
        sections["output"],
    )
    try:
        grid = build_grid(grid_s.integer("d", 1), grid_s.number("half_width"), grid_s.integer("n"))
    except SingularMassLabError as e:
        raise ConfigError(str(e), key="grid") from e

    coefficient_text = sections["coefficient"].text("spec")
    data_text = sections["data"].text("spec", DEFAULT_DATA)
    try:
        coefficient = parse_coefficient_spec(coefficient_text, base_dir)
    except SingularMassLabError as e:
        raise ConfigError(str(e), key="coefficient.spec") from e
    try:
        data = parse_data_spec(data_text, base_dir)
    except SingularMassLabError as e:
        raise ConfigError(str(e), key="data.spec") from e

    mollifier_s = sections["mollifier"]
    mollifier = mollifier_s.text("variant", "bump", MOLLIFIER_VARIANTS)
    second = mollifier_s.text("second_variant", "polynomial", MOLLIFIER_VARIANTS)

    ladder_s = sections["ladder"]
    eps0, ratio, count = ladder_s.number("eps0", 0.5), ladder_s.number("ratio", 0.5), ladder_s.integer("count", 5)
    try:
        ladder = EpsilonLadder.geometric(eps0, ratio, count)
    except ValueError as e:
        raise ConfigError(str(e), key="ladder") from e

    dt_raw = stepper_s.raw.get("dt", "auto")
    if dt_raw == "auto":
        dt: Optional[float] = None
    elif isinstance(dt_raw, (int, float)) and not isinstance(dt_raw, bool):
        dt = float(dt_raw)
    else:
        raise ConfigError(f'must be "auto" or a positive number, got {dt_raw!r}', key="stepper.dt")
    try:
        stepper = StepperConfig(
            T=stepper_s.number("T", 1.0),
            dt=dt,
            tolerance=stepper_s.number("tolerance", 1e-10),
            snapshot_stride=stepper_s.integer("snapshot_stride", 0),
            max_iterations=stepper_s.integer("max_iterations", 2000),
        )
    except ValueError as e:
        raise ConfigError(str(e), key="stepper") from e
    staggering = stepper_s.text("staggering", "arithmetic", STAGGERINGS)

    epsilon = campaign_s.number("epsilon", ladder.smallest)
    if not 0.0 < epsilon <= 1.0:
        raise ConfigError(f"must lie in (0, 1], got {epsilon}", key="campaign.epsilon")
    refinement = campaign_s.integer("refinement", 2)
    if refinement not in (2, 4):
        raise ConfigError(f"must be 2 or 4, got {refinement}", key="campaign.refinement")
    halvings = campaign_s.integer("halvings", 3)
    if halvings < NUMERICS.min_fit_points - 1:
        raise ConfigError(
            f"needs at least {NUMERICS.min_fit_points - 1} halvings for a slope, got {halvings}",
            key="campaign.halvings",
        )
    jobs = output_s.integer("jobs", 0)
    if jobs < 0:
        raise ConfigError(f"must be non-negative, got {jobs}", key="output.jobs")

    config = ExperimentConfig(
        grid=grid,
        coefficient_text=coefficient_text,
        coefficient=coefficient,
        data_text=data_text,
        data=data,
        mollifier=mollifier,
        second_mollifier=second,
        eps0=eps0,
        ratio=ratio,
        count=count,
        stepper=stepper,
        staggering=staggering,
        campaign=campaign_s.text("name", ALL_CAMPAIGNS),
        epsilon=epsilon,
        refinement=refinement,
        solution_exponent=campaign_s.flag("solution_exponent", False),
        duhamel_strategy=campaign_s.text("duhamel_strategy", "accumulated", DUHAMEL_STRATEGIES),
        halvings=halvings,
        output_dir=Path(output_s.text("dir", "reports")),
        plots=output_s.flag("plots", False),
        jobs=jobs,
        seed=output_s.integer("seed", 0),
        source=source,
    )
    _check_campaign(config)
    return config


def parse_config(path: Path) -> ExperimentConfig:
    """Read and validate an experiment document; sample paths resolve next to it."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    config = parse_config_text(text, base_dir=path.parent, source=path)
    logger.info(f"Loaded experiment {path}")
    for section, values in config.to_dict().items():
        logger.info(f"  [{section}] " + ", ".join(f"{k}={v!r}" for k, v in values.items()))
    return config
