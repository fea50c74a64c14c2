"""Generic structured three-way merge."""

__version__ = "0.1.0"
