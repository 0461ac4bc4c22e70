"""Geometry of the unit sphere embedded in R^(n+1).

Points, geodesic distance, tangent frames, quadrature grids on S^2, and the
directional derivative of the degree-(-1) homogeneous extension of a field.

The full pipeline is fixed to n = 2 (convex bodies in R^3); general n enters
only through the one-dimensional kernel reductions in :mod:`christoffel.kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ResolutionTooLow

UNIT_TOL = 1e-12


def _as_unit(v, tol=UNIT_TOL, what="vector"):
    v = np.asarray(v, dtype=float)
    nrm = float(np.linalg.norm(v))
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"{what} must be a unit vector, |v| = {nrm!r}")
    return v


@dataclass(frozen=True)
class SpherePoint:
    """A point on S^n, stored as a unit vector in R^(n+1)."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_unit(self.coords, what="point"))


@dataclass(frozen=True)
class TangentDirection:
    """A unit direction tangent to the sphere at ``base``."""

    base: SpherePoint
    dir: np.ndarray

    def __post_init__(self):
        d = _as_unit(self.dir, what="direction")
        if abs(float(d @ self.base.coords)) > UNIT_TOL:
            raise ValueError("direction is not tangent to the sphere at base")
        object.__setattr__(self, "dir", d)


def point_coords(x) -> np.ndarray:
    """Coerce a SpherePoint or array-like to a coordinate array."""
    if isinstance(x, SpherePoint):
        return x.coords
    return np.asarray(x, dtype=float)


def direction_coords(xi) -> np.ndarray:
    if isinstance(xi, TangentDirection):
        return xi.dir
    return np.asarray(xi, dtype=float)


@dataclass(frozen=True)
class SphereGrid:
    """Quadrature grid on S^2: Gauss-Legendre in cos(theta) x uniform azimuth.

    Nodes are ordered theta-major: node index = i_polar * (2L) + j_azimuth,
    with theta increasing (no poles among the nodes).  The rule integrates
    every spherical harmonic of degree <= 2L-1 exactly.
    """

    L: int
    nodes: np.ndarray            # (N, 3) unit vectors
    weights: np.ndarray          # (N,) positive, summing to 4*pi
    polar_nodes: np.ndarray      # (L,) Gauss-Legendre nodes in cos(theta), theta-ascending
    polar_weights: np.ndarray    # (L,) matching Gauss-Legendre weights
    azimuth_count: int
    n: int = 2
    thetas: np.ndarray = field(default=None, repr=False)
    phis: np.ndarray = field(default=None, repr=False)

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    def integrate(self, values) -> float:
        """Quadrature sum over the grid (fixed, deterministic order)."""
        return float(self.weights @ np.asarray(values, dtype=float))


def make_grid(L: int) -> SphereGrid:
    """Build the S^2 quadrature grid with L polar and 2L azimuthal nodes.

    Parameters
    ----------
    L : int
        Polar resolution, at least 4.  Total node count is 2*L**2.

    Raises
    ------
    ResolutionTooLow
        If L < 4.
    """
    if L < 4:
        raise ResolutionTooLow(f"grid needs L >= 4, got {L}")
    t, wt = np.polynomial.legendre.leggauss(L)
    # leggauss returns ascending cos(theta); flip so theta is ascending
    t = t[::-1].copy()
    wt = wt[::-1].copy()
    thetas = np.arccos(t)
    n_phi = 2 * L
    phis = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - t**2)
    x = np.outer(st, np.cos(phis))
    y = np.outer(st, np.sin(phis))
    z = np.outer(t, np.ones(n_phi))
    nodes = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    weights = np.repeat(wt * (np.pi / L), n_phi)
    return SphereGrid(
        L=L,
        nodes=nodes,
        weights=weights,
        polar_nodes=t,
        polar_weights=wt,
        azimuth_count=n_phi,
        thetas=thetas,
        phis=phis,
    )


def geodesic_dist(x, z):
    """Spherical distance arccos<x, z>, clamped for floating-point safety.

    Broadcasts over leading axes; inputs may be SpherePoint or arrays.
    """
    xc = point_coords(x)
    zc = point_coords(z)
    dot = np.clip(np.sum(xc * zc, axis=-1), -1.0, 1.0)
    return np.arccos(dot)


def tangent_basis(x):
    """Deterministic orthonormal basis of the tangent plane at x (n = 2).

    Gram-Schmidt of the coordinate axis least aligned with x, completed by
    the cross product, so the frame (e1, e2, x) is right-handed.
    """
    xc = point_coords(x)
    k = int(np.argmin(np.abs(xc)))
    a = np.zeros(3)
    a[k] = 1.0
    e1 = a - (a @ xc) * xc
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(xc, e1)
    return e1, e2


def tangent_bases(points: np.ndarray):
    """Vectorized :func:`tangent_basis` for an (N, 3) array of unit vectors."""
    pts = np.asarray(points, dtype=float)
    k = np.argmin(np.abs(pts), axis=1)
    a = np.zeros_like(pts)
    a[np.arange(len(pts)), k] = 1.0
    e1 = a - np.sum(a * pts, axis=1, keepdims=True) * pts
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(pts, e1)
    return e1, e2


def ambient_directional_derivative_minus1(f, z, xi) -> float:
    """Directional derivative of the degree-(-1) homogeneous extension of f.

    For F(y) = f(y/|y|)/|y| this is, at a sphere point z and ambient unit
    vector xi (not necessarily tangent),

        F_xi(z) = <grad_S f(z), xi> - f(z) <xi, z>.

    Requires f to carry harmonic coefficients (for the spherical gradient).
    """
    from . import harmonics  # local import; harmonics depends on this module

    zc = point_coords(z)
    xic = direction_coords(xi)
    coeffs = harmonics.require_coeffs(f)
    grad = harmonics.gradient_at(coeffs, zc[None, :])[0]
    val = harmonics.synthesize_at(coeffs, zc[None, :])[0]
    return float(grad @ xic - val * (xic @ zc))
