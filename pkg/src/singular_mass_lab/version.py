"""Version management utilities."""

import logging
from importlib import metadata
from pathlib import Path
from types import ModuleType
from typing import Optional

tomllib: Optional[ModuleType] = None
try:
    import tomllib  # type: ignore[import-not-found,no-redef]
except ImportError:
    try:
        import tomli as tomllib  # type: ignore[import-not-found,no-redef]
    except ImportError:
        pass

DISTRIBUTION_NAME = "singular-mass-lab"


def _find_pyproject() -> Optional[Path]:
    current_path = Path(__file__).parent
    for path in [current_path, current_path.parent, current_path.parent.parent]:
        potential_path = path / "pyproject.toml"
        if potential_path.exists():
            return potential_path
    return None


def get_version() -> str:
    """
    Get the package version.

    The installed distribution metadata wins; a source checkout falls back
    to the ``[project]`` table of pyproject.toml.

    Raises:
        RuntimeError: If neither source yields a version.
    """
    try:
        return metadata.version(DISTRIBUTION_NAME)
    except metadata.PackageNotFoundError:
        logging.debug("Distribution metadata not found, reading pyproject.toml")

    pyproject_path = _find_pyproject()
    if pyproject_path is None:
        raise RuntimeError("pyproject.toml not found in project directory tree")
    if tomllib is None:
        raise RuntimeError("tomllib not available - install tomli for Python < 3.11")

    try:
        with open(pyproject_path, "rb") as f:
            data = tomllib.load(f)
    except Exception as e:
        raise RuntimeError(f"Error reading version from pyproject.toml: {e}")

    version = data.get("project", {}).get("version")
    if not version:
        raise RuntimeError("Version not found in pyproject.toml [project] section")
    logging.debug(f"Version loaded from pyproject.toml: {version}")
    return str(version)


_cached_version: Optional[str] = None


def get_cached_version() -> str:
    """Get version with caching to avoid repeated lookups."""
    global _cached_version
    if _cached_version is None:
        _cached_version = get_version()
    return _cached_version
