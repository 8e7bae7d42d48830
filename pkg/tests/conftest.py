"""Shared fixtures: small grids, Gaussian packets and problems that solve in milliseconds."""

from pathlib import Path

import numpy as np
import pytest

from singular_mass_lab.config import StepperConfig
from singular_mass_lab.core.coefficients import (
    Bump,
    CoefficientSpec,
    Delta,
    GaussianPacket,
    Jump,
    make_mollifier,
)
from singular_mass_lab.core.grid_field import ComplexField, Grid, sample_field
from singular_mass_lab.core.problem import Problem


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid_1d() -> Grid:
    return Grid(1, 4.0, 64)


@pytest.fixture
def grid_2d() -> Grid:
    return Grid(2, 4.0, 32)


@pytest.fixture
def gaussian_1d(grid_1d) -> ComplexField:
    return sample_field(grid_1d, lambda x: np.exp(-(x**2)) * np.exp(1j * x))


@pytest.fixture
def constant_spec() -> CoefficientSpec:
    return CoefficientSpec(1.0)


@pytest.fixture
def delta_spec() -> CoefficientSpec:
    return CoefficientSpec(1.0, (Delta((0.0,), 1.0),))


@pytest.fixture
def jump_spec() -> CoefficientSpec:
    return CoefficientSpec(1.0, (Jump(0.0, 1.0),))


@pytest.fixture
def bump_spec() -> CoefficientSpec:
    return CoefficientSpec(1.0, (Bump((0.0,), 1.0, 1.0),))


@pytest.fixture
def packet() -> GaussianPacket:
    return GaussianPacket((0.0,), 1.0, 0.0)


@pytest.fixture
def make_problem(packet):
    """Problem factory over a 1D grid; keyword overrides for anything else."""

    def factory(spec, n=64, half_width=4.0, T=0.1, dt=None, mollifier="bump", data=None, **kwargs):
        return Problem(
            spec,
            data or packet,
            Grid(1, half_width, n),
            StepperConfig(T=T, dt=dt),
            make_mollifier(mollifier, 1),
            **kwargs,
        )

    return factory


@pytest.fixture
def write_config(tmp_path):
    """Write a TOML document into tmp_path and return its path."""

    def writer(text: str, name: str = "experiment.toml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return writer
