"""Numerical companion for minimal graphs in higher codimension.

Meshes of balls, annuli and solid tori; PL graph measurements (mass,
boundary mass formula, weak residual, density ratio); Hopf-type boundary
data; degree and Hopf invariant; mass bounds and their crossing; an area
minimizer with continuation in the boundary scaling.
"""

__version__ = "0.1.0"
