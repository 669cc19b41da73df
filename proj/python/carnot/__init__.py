"""Numerical sub-Riemannian distances on step-two Carnot groups and the
Engel/Martinet models."""

from carnot._core import *  # noqa: F401,F403
from carnot._core import __version__  # noqa: F401
