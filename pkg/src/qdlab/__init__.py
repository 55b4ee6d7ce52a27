"""Quasidiagonality witnesses on free groups, computed on finite windows."""

__version__ = "0.1.0"
