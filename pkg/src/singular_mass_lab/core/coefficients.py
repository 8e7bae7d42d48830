"""Singular coefficients, Friedrichs mollifiers and the regularization g_eps = g * psi_eps.

A coefficient is a positive background plus a catalogue of nonnegative atoms.
Mollification uses exact rules where they exist (delta, jump) and a
normalized composite Simpson rule over the eps-support otherwise; sampled
atoms are convolved node-to-node with a discrete kernel of unit mass.
Everything is computed on the periodic box, so convolutions wrap.
"""

import functools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, ndimage
from scipy.interpolate import PchipInterpolator

from ..config import NUMERICS
from ..errors import CoefficientError, ResolutionError
from .grid_field import (
    ComplexField,
    Grid,
    RealField,
    h2_norm,
    resample,
    translate,
    w1inf_parts,
)

logger = logging.getLogger(__name__)

MOLLIFIER_VARIANTS = ("bump", "polynomial")
# points per unit of t for the tabulated primitive of the bump profile
_PRIMITIVE_TABLE_POINTS = 1001
# Simpson nodes along each chord of the unit disk (odd)
_CHORD_POINTS = 2001


def _bump_shape(r2: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r2, dtype=float)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def _polynomial_shape(r2: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r2, dtype=float)
    inside = r2 < 1.0
    out[inside] = (1.0 - r2[inside]) ** 3
    return out


_SHAPES = {"bump": _bump_shape, "polynomial": _polynomial_shape}
# closed-form integrals of (1 - r^2)^3 over the unit ball in d = 1, 2
_POLYNOMIAL_MASS = {1: 32.0 / 35.0, 2: math.pi / 4.0}


@functools.lru_cache(maxsize=None)
def _normalization(variant: str, d: int) -> float:
    if variant == "polynomial":
        return 1.0 / _POLYNOMIAL_MASS[d]
    shape = _SHAPES[variant]
    if d == 1:
        mass, _ = integrate.quad(
            lambda x: float(shape(np.array(x * x))), -1.0, 1.0, epsabs=1e-15, epsrel=1e-14
        )
    else:
        mass, _ = integrate.quad(
            lambda r: 2.0 * math.pi * r * float(shape(np.array(r * r))),
            0.0,
            1.0,
            epsabs=1e-15,
            epsrel=1e-14,
        )
    return 1.0 / mass


@dataclass(frozen=True)
class Mollifier:
    """Radial Friedrichs mollifier psi on the unit ball of R^d, normalized to unit mass."""

    variant: str
    d: int = 1
    normalization: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.variant not in MOLLIFIER_VARIANTS:
            raise CoefficientError(
                f"unknown mollifier variant {self.variant!r}; known: {', '.join(MOLLIFIER_VARIANTS)}"
            )
        if self.d not in (1, 2):
            raise CoefficientError(f"mollifiers are defined for d in (1, 2), got {self.d}")
        if self.normalization <= 0.0:
            object.__setattr__(self, "normalization", _normalization(self.variant, self.d))

    def radial(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.normalization * _SHAPES[self.variant](r * r)

    def __call__(self, *coords: np.ndarray) -> np.ndarray:
        r2 = sum(np.asarray(c, dtype=float) ** 2 for c in coords)
        return self.normalization * _SHAPES[self.variant](np.asarray(r2))

    def scaled(self, epsilon: float, *coords: np.ndarray) -> np.ndarray:
        """psi_eps(x) = eps^{-d} psi(x / eps)."""
        return self(*(np.asarray(c) / epsilon for c in coords)) / epsilon**self.d

    def primitive(self, t: np.ndarray) -> np.ndarray:
        """Mass of psi in the half space {x_1 < t}; a monotone map [-1, 1] -> [0, 1]."""
        t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
        if self.variant == "polynomial" and self.d == 1:
            c = self.normalization
            return 0.5 + c * (t - t**3 + 0.6 * t**5 - t**7 / 7.0)
        return _tabulated_primitive(self.variant, self.d)(t)

    def describe(self) -> str:
        return f"{self.variant} (d={self.d})"


def _chord_marginal(psi: "Mollifier", s: np.ndarray) -> np.ndarray:
    """Integral of a radial 2D psi along the chord {x_1 = s} of the unit disk, for each s.

    The chord is parametrized as y = sqrt(1 - s^2) v with v in [0, 1], so every
    chord gets the same number of Simpson nodes however short it is.
    """
    v = np.linspace(0.0, 1.0, _CHORD_POINTS)
    half_chord = np.sqrt(np.clip(1.0 - s**2, 0.0, None))
    r = np.hypot(s[:, None], half_chord[:, None] * v[None, :])
    return 2.0 * half_chord * integrate.simpson(psi.radial(r), x=v, axis=1)


@functools.lru_cache(maxsize=None)
def _tabulated_primitive(variant: str, d: int) -> PchipInterpolator:
    psi = Mollifier(variant, d)
    nodes = np.linspace(0.0, 1.0, _PRIMITIVE_TABLE_POINTS)
    if d == 1:
        increments = [
            integrate.quad(lambda s: float(psi.radial(np.array(s))), a, b, epsabs=1e-16, epsrel=1e-13)[0]
            for a, b in zip(nodes[:-1], nodes[1:])
        ]
        upper = 0.5 + np.concatenate(([0.0], np.cumsum(increments)))
    else:
        upper = 0.5 + integrate.cumulative_simpson(_chord_marginal(psi, nodes), x=nodes, initial=0.0)
    # symmetry of psi: the mass below -t equals the mass above t
    t = np.concatenate((-nodes[:0:-1], nodes))
    values = np.concatenate((1.0 - upper[:0:-1], upper))
    logger.debug(f"Tabulated primitive for {variant} (d={d}): total mass {values[-1]:.15f}")
    return PchipInterpolator(t, np.clip(values, 0.0, 1.0))


def make_mollifier(variant: str = "bump", d: int = 1) -> Mollifier:
    """Normalized mollifier profile; the constant is computed once per (variant, d)."""
    mollifier = Mollifier(variant, d)
    logger.debug(f"Mollifier {mollifier.describe()} normalization {mollifier.normalization:.15g}")
    return mollifier


def scale_mollifier(psi: Mollifier, epsilon: float, x: Union[float, Sequence[float]]) -> float:
    """Pointwise psi_eps(x) = eps^{-d} psi(x / eps) for eps in (0, 1]."""
    _check_epsilon(epsilon)
    coords = (x,) if np.isscalar(x) else tuple(x)  # type: ignore[arg-type]
    if len(coords) != psi.d:
        raise CoefficientError(f"point has {len(coords)} coordinates, mollifier has d={psi.d}")
    return float(psi.scaled(epsilon, *(np.array(c, dtype=float) for c in coords)))


def _check_epsilon(epsilon: float) -> None:
    if not (0.0 < epsilon <= 1.0):
        raise ResolutionError(f"regularization scale must lie in (0, 1], got {epsilon}")


# ---------------------------------------------------------------------------
# Atoms and specs


def _as_center(value: Union[float, Sequence[float]]) -> Tuple[float, ...]:
    if np.isscalar(value):
        return (float(value),)  # type: ignore[arg-type]
    return tuple(float(v) for v in value)  # type: ignore[union-attr]


@dataclass(frozen=True)
class Delta:
    """weight * delta(x - center)."""

    center: Tuple[float, ...]
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _as_center(self.center))
        if self.weight < 0 or not math.isfinite(self.weight):
            raise CoefficientError(f"delta weight must be nonnegative, got {self.weight}")

    def shifted(self, offset: Tuple[float, ...]) -> "Delta":
        return replace(self, center=_shift_center(self.center, offset))


@dataclass(frozen=True)
class Jump:
    """Step of ``height`` across x_1 = center, wrapped back down smoothly.

    Measured from the step, s = (x_1 - center) mod 2L: the atom equals
    ``height`` for s < L/2, descends through a C-infinity transition on
    [L/2, 3L/2] and vanishes beyond, so it is periodic-compatible with a
    single sharp edge.
    """

    center: float
    height: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", float(self.center))
        if self.height < 0 or not math.isfinite(self.height):
            raise CoefficientError(f"jump height must be nonnegative, got {self.height}")

    def shifted(self, offset: Tuple[float, ...]) -> "Jump":
        return replace(self, center=self.center + offset[0])


@dataclass(frozen=True)
class Bump:
    """height * exp(1 - 1 / (1 - |x - center|^2 / width^2)), zero outside the ball."""

    center: Tuple[float, ...]
    width: float = 1.0
    height: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _as_center(self.center))
        if not self.width > 0:
            raise CoefficientError(f"bump width must be positive, got {self.width}")
        if self.height < 0 or not math.isfinite(self.height):
            raise CoefficientError(f"bump height must be nonnegative, got {self.height}")

    def shifted(self, offset: Tuple[float, ...]) -> "Bump":
        return replace(self, center=_shift_center(self.center, offset))


@dataclass(frozen=True, eq=False)
class Sampled:
    """Nonnegative grid samples; ``source`` is the CSV path used by the text form."""

    field: RealField
    source: Optional[str] = None

    def __post_init__(self):
        if np.any(self.field.values < 0):
            raise CoefficientError("sampled atoms must be nonnegative")

    def shifted(self, offset: Tuple[float, ...]) -> "Sampled":
        h = self.field.grid.h
        steps = [round(o / h) for o in offset]
        if any(abs(s * h - o) > 1e-9 * h for s, o in zip(steps, offset)):
            raise CoefficientError("sampled atoms shift by whole grid spacings only")
        return Sampled(translate(self.field, steps), self.source)


Atom = Union[Delta, Jump, Bump, Sampled]


def _shift_center(center: Tuple[float, ...], offset: Tuple[float, ...]) -> Tuple[float, ...]:
    if len(center) == 1 and len(offset) > 1:
        center = center * len(offset)
    return tuple(c + o for c, o in zip(center, offset))


@dataclass(frozen=True)
class CoefficientSpec:
    """g = background + sum of atoms, with background > 0 and nonnegative atoms."""

    background: float
    atoms: Tuple[Atom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if not (self.background > 0 and math.isfinite(self.background)):
            raise CoefficientError(f"background must be positive, got {self.background}")

    @property
    def is_regular(self) -> bool:
        """True when g itself is W^{1,inf} (no delta or jump atoms)."""
        return not any(isinstance(atom, (Delta, Jump)) for atom in self.atoms)

    def shifted(self, offset: Union[float, Sequence[float]]) -> "CoefficientSpec":
        off = _as_center(offset)
        return CoefficientSpec(self.background, tuple(atom.shifted(off) for atom in self.atoms))

    def to_text(self) -> str:
        from .spec_text import format_coefficient_spec

        return format_coefficient_spec(self)


@dataclass(frozen=True)
class GaussianPacket:
    """amplitude * exp(-a |x - center|^2 + i k0 x_1)."""

    center: Tuple[float, ...] = (0.0,)
    a: float = 1.0
    k0: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _as_center(self.center))
        if not self.a > 0:
            raise CoefficientError(f"gaussian width parameter a must be positive, got {self.a}")

    def evaluate(self, grid: Grid, *coords: np.ndarray) -> np.ndarray:
        center = _center_vector(self.center, grid.d)
        r2 = sum(grid.wrap(x - c) ** 2 for x, c in zip(coords, center))
        return self.amplitude * np.exp(-self.a * r2 + 1j * self.k0 * coords[0])


@dataclass(frozen=True, eq=False)
class SampledData:
    """Complex initial data given on a grid."""

    field: ComplexField
    source: Optional[str] = None


DataSpec = Union[GaussianPacket, Delta, SampledData]


def _center_vector(center: Tuple[float, ...], d: int) -> Tuple[float, ...]:
    if len(center) == d:
        return center
    if len(center) == 1:
        return center * d
    raise CoefficientError(f"center {center} does not match dimension {d}")


# ---------------------------------------------------------------------------
# Regularization


@dataclass(frozen=True)
class EpsilonLadder:
    """Strictly decreasing regularization scales in (0, 1]."""

    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) < NUMERICS.min_fit_points:
            raise ValueError(
                f"an epsilon ladder needs at least {NUMERICS.min_fit_points} values, got {len(values)}"
            )
        if any(not (0.0 < v <= 1.0) for v in values):
            raise ValueError(f"ladder values must lie in (0, 1]: {values}")
        if any(b >= a for a, b in zip(values, values[1:])):
            raise ValueError(f"ladder must be strictly decreasing: {values}")

    @classmethod
    def geometric(cls, eps0: float = 0.5, ratio: float = 0.5, count: int = 5) -> "EpsilonLadder":
        if not (0.0 < ratio < 1.0):
            raise ValueError(f"ladder ratio must lie in (0, 1), got {ratio}")
        return cls(tuple(eps0 * ratio**k for k in range(count)))

    def __iter__(self) -> Iterator[float]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def smallest(self) -> float:
        return self.values[-1]


@dataclass(frozen=True, eq=False)
class RegularizedCoefficient:
    """Grid samples of g_eps with a certified lower bound c0.

    ``epsilon`` is None when the coefficient was sampled pointwise instead of
    mollified (the classical coefficient of a regular spec).
    """

    field: RealField
    epsilon: Optional[float]
    c0: float
    w1inf: float = 0.0
    sup: float = 0.0
    grad_sup: float = 0.0
    mollifier: Optional[str] = None

    def __post_init__(self):
        minimum = float(np.min(self.field.values))
        if not (self.c0 > 0 and minimum >= self.c0):
            raise CoefficientError(
                f"regularized coefficient violates its lower bound: min {minimum} < c0 {self.c0}"
            )
        sup, grad_sup = w1inf_parts(self.field)
        object.__setattr__(self, "sup", sup)
        object.__setattr__(self, "grad_sup", grad_sup)
        object.__setattr__(self, "w1inf", sup + grad_sup)

    @property
    def grid(self) -> Grid:
        return self.field.grid

    @property
    def maximum(self) -> float:
        return float(np.max(self.field.values))


def _resolution_ok(grid: Grid, epsilon: float) -> bool:
    return epsilon >= NUMERICS.resolution_factor * grid.h * (1.0 - 1e-12)


def _for_dimension(psi: Mollifier, d: int) -> Mollifier:
    return psi if psi.d == d else make_mollifier(psi.variant, d)


def _simpson_weights(count: int, span: float) -> np.ndarray:
    if count % 2 == 0:
        count += 1
    weights = np.ones(count)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return weights * (span / (count - 1)) / 3.0


def _smoothing_rule(psi: Mollifier, epsilon: float) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature offsets (Q, d) and weights (Q,) for f -> f * psi_eps.

    The weights are the composite Simpson weights times psi_eps, rescaled to
    sum to one so constants pass through unchanged.
    """
    count = NUMERICS.simpson_nodes_1d if psi.d == 1 else NUMERICS.simpson_nodes_2d
    count += 1 - count % 2
    nodes = np.linspace(-epsilon, epsilon, count)
    simpson = _simpson_weights(count, 2.0 * epsilon)
    if psi.d == 1:
        offsets = nodes[:, None]
        weights = simpson * psi.scaled(epsilon, nodes)
    else:
        y1, y2 = np.meshgrid(nodes, nodes, indexing="ij")
        offsets = np.stack((y1.ravel(), y2.ravel()), axis=1)
        weights = (np.outer(simpson, simpson) * psi.scaled(epsilon, y1, y2)).ravel()
    keep = weights > 0.0
    weights = weights[keep]
    return offsets[keep], weights / weights.sum()


def _convolve_smooth(
    function: Callable[..., np.ndarray],
    grid: Grid,
    psi: Mollifier,
    epsilon: float,
    coords: Optional[Tuple[np.ndarray, ...]] = None,
) -> np.ndarray:
    """sum_q w_q f(x - y_q) at every node (or at the given coordinate arrays)."""
    offsets, weights = _smoothing_rule(psi, epsilon)
    coords = grid.coordinates() if coords is None else coords
    total: Optional[np.ndarray] = None
    for offset, weight in zip(offsets, weights):
        term = weight * function(*(x - y for x, y in zip(coords, offset)))
        total = term if total is None else total + term
    assert total is not None
    return total


def _discrete_kernel(grid: Grid, psi: Mollifier, epsilon: float) -> np.ndarray:
    reach = int(math.floor(epsilon / grid.h))
    if 2 * reach + 1 > grid.n:
        raise ResolutionError(f"eps={epsilon} exceeds half the periodic box")
    offsets = np.arange(-reach, reach + 1) * grid.h
    kernel = psi.scaled(epsilon, *np.meshgrid(*([offsets] * grid.d), indexing="ij"))
    total = kernel.sum()
    if total <= 0.0:
        raise ResolutionError(f"eps={epsilon} is below the grid spacing h={grid.h}")
    return kernel / total


def _convolve_samples(values: np.ndarray, grid: Grid, psi: Mollifier, epsilon: float) -> np.ndarray:
    kernel = _discrete_kernel(grid, psi, epsilon)
    return ndimage.convolve(values, kernel, mode="wrap")


def _bump_values(atom: Bump, grid: Grid, *coords: np.ndarray) -> np.ndarray:
    center = _center_vector(atom.center, grid.d)
    r2 = sum(grid.wrap(x - c) ** 2 for x, c in zip(coords, center)) / atom.width**2
    out = np.zeros_like(r2, dtype=float)
    inside = r2 < 1.0
    out[inside] = atom.height * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        rise = np.where(t > 0.0, np.exp(-1.0 / np.where(t > 0.0, t, 1.0)), 0.0)
        fall = np.where(t < 1.0, np.exp(-1.0 / np.where(t < 1.0, 1.0 - t, 1.0)), 0.0)
    return rise / (rise + fall)


def _jump_offset(atom: Jump, grid: Grid, x1: np.ndarray) -> np.ndarray:
    """s = (x_1 - center) mod 2L in [0, 2L)."""
    return np.mod(x1 - atom.center, grid.period)


def _jump_smooth_branch(atom: Jump, grid: Grid, s: np.ndarray) -> np.ndarray:
    L = grid.half_width
    return atom.height * (1.0 - _smooth_step((s - 0.5 * L) / L))


def _jump_values(atom: Jump, grid: Grid, x1: np.ndarray) -> np.ndarray:
    return _jump_smooth_branch(atom, grid, _jump_offset(atom, grid, x1))


def _regularize_jump(atom: Jump, grid: Grid, psi: Mollifier, epsilon: float) -> np.ndarray:
    if epsilon > 0.25 * grid.half_width:
        raise ResolutionError(
            f"jump atoms need eps <= L/4 = {0.25 * grid.half_width}, got {epsilon}"
        )
    coords = grid.coordinates()
    s = _jump_offset(atom, grid, coords[0])
    near = grid.wrap(s)
    at_edge = np.abs(near) < epsilon
    result = np.empty(grid.shape)
    # windows crossing the edge see an exact step: the primitive of psi
    result[at_edge] = atom.height * psi.primitive(near[at_edge] / epsilon)
    away = ~at_edge
    if np.any(away):
        s_away = s[away]
        # the branch depends on x_1 only; the other axes ride along at zero
        frame = (s_away,) + tuple(np.zeros_like(s_away) for _ in range(grid.d - 1))
        result[away] = _convolve_smooth(
            lambda y, *_: _jump_smooth_branch(atom, grid, y),
            grid,
            psi,
            epsilon,
            coords=frame,
        )
    return result


def _regularize_atom(atom: Atom, grid: Grid, psi: Mollifier, epsilon: float) -> np.ndarray:
    if isinstance(atom, Delta):
        center = _center_vector(atom.center, grid.d)
        coords = grid.coordinates()
        return atom.weight * psi.scaled(
            epsilon, *(grid.wrap(x - c) for x, c in zip(coords, center))
        )
    if isinstance(atom, Jump):
        return _regularize_jump(atom, grid, psi, epsilon)
    if isinstance(atom, Bump):
        if atom.width >= grid.half_width:
            raise CoefficientError(f"bump width {atom.width} must be below L={grid.half_width}")
        return _convolve_smooth(lambda *x: _bump_values(atom, grid, *x), grid, psi, epsilon)
    if isinstance(atom, Sampled):
        if atom.field.grid != grid:
            raise CoefficientError(
                f"sampled atom lives on {atom.field.grid.describe()}, not {grid.describe()}"
            )
        return _convolve_samples(atom.field.values, grid, psi, epsilon)
    raise CoefficientError(f"unsupported atom {atom!r}")


def regularize(
    g: CoefficientSpec, psi: Mollifier, epsilon: float, grid: Grid
) -> RegularizedCoefficient:
    """g_eps = g * psi_eps sampled on the grid, with c0 = background."""
    _check_epsilon(epsilon)
    if not _resolution_ok(grid, epsilon):
        logger.warning(
            f"eps={epsilon:.4g} is below {NUMERICS.resolution_factor:g}h={NUMERICS.resolution_factor * grid.h:.4g}; "
            "the mollifier is under-resolved"
        )
    psi = _for_dimension(psi, grid.d)
    values = np.full(grid.shape, g.background)
    for atom in g.atoms:
        values = values + _regularize_atom(atom, grid, psi, epsilon)
    coefficient = RegularizedCoefficient(
        RealField(grid, values), epsilon, g.background, mollifier=psi.variant
    )
    logger.debug(
        f"Regularized g at eps={epsilon:.4g}: min {np.min(values):.6g}, "
        f"max {coefficient.maximum:.6g}, W1inf {coefficient.w1inf:.6g}"
    )
    return coefficient


def sample_coefficient(g: CoefficientSpec, grid: Grid) -> RegularizedCoefficient:
    """Pointwise samples of a regular coefficient (no mollification)."""
    if not g.is_regular:
        raise CoefficientError("only regular coefficients (no delta or jump atoms) can be sampled")
    coords = grid.coordinates()
    values = np.full(grid.shape, g.background)
    for atom in g.atoms:
        if isinstance(atom, Bump):
            values = values + _bump_values(atom, grid, *coords)
        elif isinstance(atom, Sampled):
            samples = atom.field if atom.field.grid == grid else resample(atom.field, grid)
            values = values + np.maximum(samples.values, 0.0)
    return RegularizedCoefficient(RealField(grid, values), None, g.background)


def regularize_data(u0: DataSpec, psi: Mollifier, epsilon: float, grid: Grid) -> ComplexField:
    """u_{0,eps} = u0 * psi_eps, real and imaginary parts convolved alike."""
    _check_epsilon(epsilon)
    if not _resolution_ok(grid, epsilon):
        logger.warning(f"eps={epsilon:.4g} under-resolves the data mollification on h={grid.h:.4g}")
    psi = _for_dimension(psi, grid.d)
    if isinstance(u0, GaussianPacket):
        values = _convolve_smooth(lambda *x: u0.evaluate(grid, *x), grid, psi, epsilon)
    elif isinstance(u0, Delta):
        values = _regularize_atom(u0, grid, psi, epsilon).astype(complex)
    elif isinstance(u0, SampledData):
        if u0.field.grid != grid:
            raise CoefficientError(
                f"sampled data lives on {u0.field.grid.describe()}, not {grid.describe()}"
            )
        values = _convolve_samples(u0.field.values.real, grid, psi, epsilon) + 1j * _convolve_samples(
            u0.field.values.imag, grid, psi, epsilon
        )
    else:
        raise CoefficientError(f"unsupported initial data {u0!r}")
    return ComplexField(grid, values)


def sample_data(u0: DataSpec, grid: Grid) -> ComplexField:
    """Pointwise samples of regular initial data."""
    if isinstance(u0, GaussianPacket):
        return ComplexField(grid, u0.evaluate(grid, *grid.coordinates()))
    if isinstance(u0, SampledData):
        return u0.field if u0.field.grid == grid else resample(u0.field, grid)
    raise CoefficientError("delta initial data has no pointwise samples; mollify it instead")


def moderateness_ladder(
    g: CoefficientSpec, psi: Mollifier, ladder: EpsilonLadder, grid: Grid
) -> List[Tuple[float, RegularizedCoefficient]]:
    """Regularize g at every ladder scale; unresolvable scales are rejected."""
    _require_resolvable(ladder, grid)
    return [(eps, regularize(g, psi, eps, grid)) for eps in ladder]


def data_moderateness_ladder(
    u0: DataSpec, psi: Mollifier, ladder: EpsilonLadder, grid: Grid
) -> List[Tuple[float, float]]:
    """(eps, ||u_{0,eps}||_H2) along the ladder."""
    _require_resolvable(ladder, grid)
    return [(eps, h2_norm(regularize_data(u0, psi, eps, grid))) for eps in ladder]


def positivity_bound(coefficients: Sequence[RegularizedCoefficient]) -> float:
    """inf over the family and the grid of g_eps."""
    return min(float(np.min(c.field.values)) for c in coefficients)


def _require_resolvable(ladder: EpsilonLadder, grid: Grid) -> None:
    if not _resolution_ok(grid, ladder.smallest):
        raise ResolutionError(
            f"ladder reaches eps={ladder.smallest:.4g} but the grid resolves only "
            f"eps >= {NUMERICS.resolution_factor * grid.h:.4g}"
        )
