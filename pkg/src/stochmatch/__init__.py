"""Workbench for online b-matching with stochastic rewards."""

__version__ = "0.1.0"

from .main import main  # noqa: E402

__all__ = ["main", "__version__"]
