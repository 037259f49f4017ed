"""Grammatical evolution of fractal curves with a prescribed dimension,
heavy-tail runtime analysis and restart strategies."""

__version__ = "0.1.0"
