"""Toolkit for intertemporal-choice and temporal-magnitude experiments."""

from . import analysis, fitting, magnitude, models, simulation, staircase

__all__ = ["analysis", "fitting", "magnitude", "models", "simulation", "staircase"]

__version__ = "0.1.0"
