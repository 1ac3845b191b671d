"""Exterior-calculus kinematics and dynamics of nonlinear elasticity.

Bundle-valued differential forms over a structured body chart, the
spatial/material/convective representation web, mass-weighted Hodge
stars, hyperelastic stress, and finite-difference residual checks of
the identities tying it all together.
"""

__version__ = "0.1.0"
