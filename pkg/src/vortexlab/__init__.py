"""Numerical toolkit for weighted circle-action invariants, Kazdan-Warner
equations, abelian vortices and Coulomb gauge fixing on flat tori."""

__version__ = "0.1.0"
