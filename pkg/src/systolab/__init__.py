"""Numerical checks of Pu's systolic inequality with a variance remainder.

Modules
-------
geometry
    Unit vectors, orthonormal 2-frames with the metric g_M, great circles and
    quadrature rules on the circle, the sphere and the frame manifold.
conformal
    Positive conformal factors f (constant, harmonic series, sampled grid).
transforms
    Great-circle integrals of f, their minima, and the variance moments.
systole
    Shortest noncontractible loop of (RP^2, f^2 g0) on an antipodal icosphere.
verify
    Reports checking the submersion identities, the inequality chains and the
    strengthened Pu inequality.
"""

__version__ = "0.1.0"
