"""Bundled worked-example tables in the y,x1,x2,count CSV cell format."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

FIXTURE_NAMES = ("loan", "death-penalty", "pathological-default")


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled fixture CSV (name without extension)."""
    if name not in FIXTURE_NAMES:
        raise KeyError(f"unknown fixture {name!r}; available: {FIXTURE_NAMES}")
    return Path(str(resources.files(__package__).joinpath(f"{name}.csv")))


def load_fixture(name: str):
    """Read a bundled fixture as a ContingencyTable222."""
    from ..tables import read_table_csv

    return read_table_csv(fixture_path(name))
