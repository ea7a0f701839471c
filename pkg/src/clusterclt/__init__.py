"""Cluster functionals, block CLT diagnostics and the iso-extremogram on space-time lattices."""
__version__ = "0.1.0"
