"""Edge-interaction lattice models on surfaces in Z^3."""

__version__ = "0.1.0"
