"""Singular Mass Lab - very weak solutions of the Schrödinger equation with singular mass."""

from .version import get_cached_version

__version__ = get_cached_version()
