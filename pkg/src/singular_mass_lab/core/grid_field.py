"""Uniform periodic grids, fields on them, difference operators and discrete norms.

The physical domain is truncated to the periodic box [-L, L)^d. Fields are
immutable numpy arrays of shape ``(n,) * d`` tagged with their grid; every
operator here is a pure function of its inputs.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, ClassVar, List, Sequence, Tuple, TypeVar, Union

import numpy as np
from scipy import signal

from ..errors import GridError

logger = logging.getLogger(__name__)

SUPPORTED_DIMENSIONS = (1, 2)
MIN_POINTS = 8


@dataclass(frozen=True)
class Grid:
    """Tensor grid with ``n`` nodes per axis on [-half_width, half_width)^d."""

    d: int
    half_width: float
    n: int

    def __post_init__(self):
        if self.d not in SUPPORTED_DIMENSIONS:
            raise GridError(f"dimension must be one of {SUPPORTED_DIMENSIONS}, got {self.d}")
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise GridError(f"half_width must be positive, got {self.half_width}")
        if self.n < MIN_POINTS:
            raise GridError(f"need at least {MIN_POINTS} points per axis, got {self.n}")
        if self.n & (self.n - 1):
            logger.debug(f"Grid with n={self.n} (not a power of two)")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def period(self) -> float:
        return 2.0 * self.half_width

    def axis_nodes(self) -> np.ndarray:
        """Node coordinates x_j = -L + j*h along one axis."""
        return -self.half_width + np.arange(self.n) * self.h

    def coordinates(self) -> Tuple[np.ndarray, ...]:
        """One coordinate array of shape ``self.shape`` per axis."""
        axis = self.axis_nodes()
        return tuple(np.meshgrid(*([axis] * self.d), indexing="ij"))

    def wrap(self, displacement: np.ndarray) -> np.ndarray:
        """Map displacements onto the periodic representative in [-L, L)."""
        return np.mod(displacement + self.half_width, self.period) - self.half_width

    def refined(self, factor: int) -> "Grid":
        """Same box with ``factor`` times as many points per axis."""
        return Grid(self.d, self.half_width, self.n * factor)

    def describe(self) -> str:
        return f"d={self.d}, half_width={self.half_width!r}, n={self.n}"


def build_grid(d: int, half_width: float, n: int) -> Grid:
    """Validated constructor used by the configuration layer."""
    grid = Grid(int(d), float(half_width), int(n))
    logger.debug(f"Built grid {grid.describe()} (h={grid.h:.6g})")
    return grid


FieldT = TypeVar("FieldT", bound="_Field")


@dataclass(frozen=True, eq=False)
class _Field:
    grid: Grid
    values: np.ndarray

    dtype: ClassVar[type] = np.float64

    def __post_init__(self):
        values = np.array(self.values, dtype=self.dtype)
        if values.shape != self.grid.shape:
            if values.size != self.grid.size:
                raise GridError(
                    f"field has {values.size} values, grid {self.grid.describe()} "
                    f"needs {self.grid.size}"
                )
            values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise GridError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def _like(self: FieldT, values: np.ndarray) -> FieldT:
        return type(self)(self.grid, values)

    def _other_values(self, other: object) -> Union[np.ndarray, complex, float]:
        if isinstance(other, _Field):
            _require_same_grid(self, other)
            return other.values
        if isinstance(other, (int, float, complex, np.number)):
            return other  # type: ignore[return-value]
        raise TypeError(f"cannot combine a field with {type(other).__name__}")

    def __add__(self: FieldT, other: object) -> FieldT:
        return self._like(self.values + self._other_values(other))

    def __sub__(self: FieldT, other: object) -> FieldT:
        return self._like(self.values - self._other_values(other))

    def __mul__(self: FieldT, other: object) -> FieldT:
        return self._like(self.values * self._other_values(other))

    __rmul__ = __mul__

    def __neg__(self: FieldT) -> FieldT:
        return self._like(-self.values)


@dataclass(frozen=True, eq=False)
class ComplexField(_Field):
    """Complex samples u_j of a wave function on a grid."""

    dtype: ClassVar[type] = np.complex128

    @property
    def real(self) -> "RealField":
        return RealField(self.grid, self.values.real)

    @property
    def imag(self) -> "RealField":
        return RealField(self.grid, self.values.imag)


@dataclass(frozen=True, eq=False)
class RealField(_Field):
    """Real samples of a coefficient on a grid."""

    dtype: ClassVar[type] = np.float64


AnyField = Union[ComplexField, RealField]


def _require_same_grid(u: _Field, v: _Field) -> None:
    if u.grid != v.grid:
        raise GridError(
            f"fields live on different grids: {u.grid.describe()} vs {v.grid.describe()}"
        )


def zeros(grid: Grid) -> ComplexField:
    return ComplexField(grid, np.zeros(grid.shape))


def sample_field(
    grid: Grid, function: Callable[..., np.ndarray], complex_valued: bool = True
) -> AnyField:
    """Evaluate ``function(x1, ..., xd)`` on the grid nodes."""
    values = np.broadcast_to(function(*grid.coordinates()), grid.shape)
    if complex_valued:
        return ComplexField(grid, values)
    return RealField(grid, values)


def translate(field: FieldT, shift: Union[int, Sequence[int]]) -> FieldT:
    """Periodic shift by whole nodes: result(x) = field(x - shift*h)."""
    shifts = (shift,) * field.grid.d if isinstance(shift, int) else tuple(shift)
    return field._like(np.roll(field.values, shifts, axis=tuple(range(field.grid.d))))


def resample(field: FieldT, grid: Grid) -> FieldT:
    """Trigonometric interpolation of a periodic field onto another grid of the same box."""
    if grid.d != field.grid.d or grid.half_width != field.grid.half_width:
        raise GridError(
            f"cannot resample {field.grid.describe()} onto {grid.describe()}: boxes differ"
        )
    values = field.values
    for axis in range(grid.d):
        values = signal.resample(values, grid.n, axis=axis)
    if isinstance(field, RealField):
        values = np.real(values)
    return type(field)(grid, values)


def l2_norm(u: _Field) -> float:
    """(h^d * sum |u_j|^2)^(1/2)."""
    return float(np.sqrt(u.grid.cell_volume * np.sum(np.abs(u.values) ** 2)))


def inner_product(u: _Field, v: _Field) -> complex:
    """h^d * sum u_j * conj(v_j)."""
    _require_same_grid(u, v)
    return complex(u.grid.cell_volume * np.vdot(v.values, u.values))


def forward_difference(u: FieldT, axis: int) -> FieldT:
    """(u_{j+1} - u_j) / h along ``axis``, periodic."""
    return u._like((np.roll(u.values, -1, axis=axis) - u.values) / u.grid.h)


def backward_difference(u: FieldT, axis: int) -> FieldT:
    """(u_j - u_{j-1}) / h along ``axis``, periodic."""
    return u._like((u.values - np.roll(u.values, 1, axis=axis)) / u.grid.h)


def gradient(u: FieldT) -> List[FieldT]:
    """Centered periodic differences (u_{j+1} - u_{j-1}) / (2h), one field per axis."""
    h = u.grid.h
    return [
        u._like((np.roll(u.values, -1, axis=axis) - np.roll(u.values, 1, axis=axis)) / (2.0 * h))
        for axis in range(u.grid.d)
    ]


def laplacian(u: FieldT) -> FieldT:
    """Second-difference stencil (u_{j+1} - 2u_j + u_{j-1}) / h^2 summed over axes."""
    h2 = u.grid.h ** 2
    total = np.zeros_like(u.values)
    for axis in range(u.grid.d):
        total = total + (
            np.roll(u.values, -1, axis=axis) - 2.0 * u.values + np.roll(u.values, 1, axis=axis)
        )
    return u._like(total / h2)


def gradient_sum_norm(u: _Field) -> float:
    """||sum_j d_j u||_L2 with the gradient summed over axes before the norm."""
    parts = gradient(u)
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return l2_norm(total)


def h2_norm(u: _Field) -> float:
    """||u|| + ||sum_j d_j u|| + ||Laplacian u||, literally as the estimate is stated.

    For d = 2 this differs from the usual Sobolev norm, which sums the axis
    derivatives' norms; in d = 1 the two coincide.
    """
    return l2_norm(u) + gradient_sum_norm(u) + l2_norm(laplacian(u))


def norm_series(grid: Grid, block: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(||u||, ||sum_j d_j u||, ||Laplacian u||) for every field stacked along axis 0.

    Row k agrees with l2_norm, gradient_sum_norm and l2_norm(laplacian(.))
    of ``block[k]`` on ``grid``.
    """
    if block.shape[1:] != grid.shape:
        raise GridError(f"block of shape {block.shape} does not stack fields of {grid.describe()}")
    h = grid.h
    axes = tuple(range(1, block.ndim))
    gradient_sum = np.zeros_like(block)
    lap = np.zeros_like(block)
    for axis in axes:
        ahead = np.roll(block, -1, axis=axis)
        behind = np.roll(block, 1, axis=axis)
        gradient_sum = gradient_sum + (ahead - behind) / (2.0 * h)
        lap = lap + (ahead - 2.0 * block + behind)
    lap = lap / h**2

    def norms(values: np.ndarray) -> np.ndarray:
        return np.sqrt(grid.cell_volume * np.sum(np.abs(values) ** 2, axis=axes))

    return norms(block), norms(gradient_sum), norms(lap)


def w1inf_parts(f: _Field) -> Tuple[float, float]:
    """(sup |f|, sup over axes and nodes of |centered difference|)."""
    sup = float(np.max(np.abs(f.values)))
    grad_sup = max(float(np.max(np.abs(part.values))) for part in gradient(f))
    return sup, grad_sup


def w1inf_norm(f: _Field) -> float:
    """||f||_Linf + ||grad f||_Linf on the grid.

    Fields that are not periodic-compatible (a sawtooth, say) pick up the
    jump across the seam in the difference term.
    """
    sup, grad_sup = w1inf_parts(f)
    return sup + grad_sup
