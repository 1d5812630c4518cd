"""Numerical and I/O services."""
