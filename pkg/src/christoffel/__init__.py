"""Numerical toolkit for the Christoffel problem on the unit sphere.

Solves (Laplacian + n) u = f on S^n spectrally (n = 2 pipeline), evaluates
fundamental-solution convexity criteria and classical sufficient conditions,
solves the L_p extension for p >= 2, and reconstructs convex bodies as meshes.
"""

from . import body, convexity, errors, harmonics, kernels, lp, sphere

__all__ = ["body", "convexity", "errors", "harmonics", "kernels", "lp", "sphere"]
__version__ = "0.1.0"
