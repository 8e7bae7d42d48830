"""CSV reports, metadata sidecars, gnuplot scripts and field files.

Every file is written through an atomic temporary file so an interrupted
run never leaves a half-written report behind. Floats are written with
``%.17g``, which makes two runs of one configuration byte-identical.
"""

import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd
from atomicwrites import atomic_write  # type: ignore[import-untyped]

from ..errors import GridError
from .grid_field import ComplexField, Grid, RealField
from .rates import RateReport

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
_GRID_LINE = re.compile(
    r"#\s*d=(?P<d>\d+),\s*half_width=(?P<half_width>[^,]+),\s*n=(?P<n>\d+)\s*$"
)
_AXES = ("i", "j")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with atomic_write(path, mode="w", encoding="utf-8", overwrite=True) as handle:
        handle.write(text)


def _frame_text(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_field_csv(field: Union[ComplexField, RealField], path: Path) -> Path:
    """One row per node: index per axis, then ``re, im`` or ``value``."""
    grid = field.grid
    indices = np.indices(grid.shape).reshape(grid.d, -1)
    columns: Dict[str, Any] = {_AXES[axis]: indices[axis] for axis in range(grid.d)}
    flat = field.values.ravel()
    if isinstance(field, ComplexField):
        columns["re"] = flat.real
        columns["im"] = flat.imag
    else:
        columns["value"] = flat
    header = f"# d={grid.d}, half_width={grid.half_width!r}, n={grid.n}\n"
    _write_text(path, header + _frame_text(pd.DataFrame(columns)))
    logger.debug(f"Wrote field on {grid.describe()} to {path}")
    return path


def read_field_csv(path: Path, complex_valued: Optional[bool] = None) -> Union[ComplexField, RealField]:
    """Inverse of write_field_csv; ``complex_valued`` forces the field type."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            first = handle.readline().strip()
        frame = pd.read_csv(path, skiprows=1, float_precision="round_trip")
    except (OSError, pd.errors.ParserError) as e:
        raise GridError(f"cannot read field file {path}: {e}") from e
    match = _GRID_LINE.match(first)
    if match is None:
        raise GridError(f"{path}: first line must be '# d=<d>, half_width=<L>, n=<n>', got {first!r}")
    grid = Grid(int(match["d"]), float(match["half_width"]), int(match["n"]))
    if len(frame) != grid.size:
        raise GridError(f"{path}: expected {grid.size} rows for {grid.describe()}, found {len(frame)}")

    order = np.ravel_multi_index(
        tuple(frame[_AXES[axis]].to_numpy() for axis in range(grid.d)), grid.shape
    )
    values = np.empty(grid.size, dtype=complex)
    if "re" in frame.columns:
        values[order] = frame["re"].to_numpy() + 1j * frame["im"].to_numpy()
    elif "value" in frame.columns:
        values[order] = frame["value"].to_numpy()
    else:
        raise GridError(f"{path}: needs either 're, im' or 'value' columns")

    if complex_valued is None:
        complex_valued = "re" in frame.columns
    if complex_valued:
        return ComplexField(grid, values)
    if np.any(values.imag != 0):
        raise GridError(f"{path}: real field requested but the file holds complex values")
    return RealField(grid, values.real)


def gnuplot_script(csv_name: str, frame: pd.DataFrame, rates: Iterable[RateReport]) -> str:
    """Log-log plot of each fitted quantity against 1/eps, with its fitted line."""
    lines = [
        f"# plots {csv_name}",
        'set datafile separator ","',
        "set logscale xy",
        'set xlabel "1/epsilon"',
        "set key left top",
    ]
    plots = []
    for k, rate in enumerate(rates):
        if rate.quantity not in frame.columns:
            continue
        column = list(frame.columns).index(rate.quantity) + 1
        plots.append(f"'{csv_name}' every ::1 using (1/$1):{column} with linespoints title '{rate.quantity}'")
        if rate.fitted:
            lines.append(f"f{k}(x) = exp({rate.intercept!r}) * x**({rate.exponent!r})")
            plots.append(f"f{k}(x) title 'slope {rate.exponent:.3f}' with lines dashtype 2")
    if plots:
        lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def write_report(
    frame: pd.DataFrame,
    path: Path,
    metadata: Dict[str, Any],
    rates: Iterable[RateReport] = (),
    plots: bool = False,
) -> List[Path]:
    """Write ``<path>.csv``, ``<path>.meta.json`` and optionally ``<path>.gp``."""
    path = Path(path)
    csv_path = path.with_suffix(".csv")
    meta_path = path.with_suffix(".meta.json")
    _write_text(csv_path, _frame_text(frame))
    _write_text(meta_path, json.dumps(metadata, indent=2, sort_keys=True, default=str) + "\n")
    written = [csv_path, meta_path]
    if plots and "epsilon" in frame.columns:
        gp_path = path.with_suffix(".gp")
        _write_text(gp_path, gnuplot_script(csv_path.name, frame, rates))
        written.append(gp_path)
    logger.info(f"Wrote report {csv_path}")
    return written

