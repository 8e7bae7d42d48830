"""Numerical core: grids, coefficients, evolution, oracles and campaigns."""
