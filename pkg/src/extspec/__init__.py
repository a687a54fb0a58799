"""Weighted Neumann p-Laplacian eigenvalues on the exterior of the unit ball."""

__version__ = "0.1.0"
