"""Exact Ext computations over small graded Hopf algebras."""

__version__ = "0.1.0"
