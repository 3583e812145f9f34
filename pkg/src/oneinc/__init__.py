"""Multiclass learning laboratory: one-inclusion graphs, dimensions, Cantor classes, compression."""

__version__ = "0.1.0"
