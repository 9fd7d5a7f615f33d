"""Bundled example models."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def example_path(name: str = "acme") -> Path:
    """Directory of a bundled example; the model file is ``<name>.dsm`` inside it."""
    return Path(str(resources.files(__package__).joinpath(name)))


def acme_model_path() -> Path:
    return example_path("acme") / "acme.dsm"
