"""Equilibria of spatial metapopulation models and their local Levins approximation."""
from __future__ import annotations

__version__ = "0.1.0"
