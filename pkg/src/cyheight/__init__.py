"""Artin-Mazur and quasi-Frobenius-split heights of Calabi-Yau hypersurfaces."""
__version__ = "0.1.0"
