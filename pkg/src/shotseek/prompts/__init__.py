"""Versioned prompt templates shipped as package data."""

from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=None)
def load(name: str) -> str:
    return resources.files(__name__).joinpath(name).read_text(encoding="utf-8")
