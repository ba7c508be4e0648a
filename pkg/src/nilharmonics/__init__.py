"""Exact arithmetic and certified numerics on homogeneous Lie groups."""

__version__ = "0.1.0"
