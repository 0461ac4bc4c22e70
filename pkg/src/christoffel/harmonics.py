"""Real spherical-harmonic analysis on S^2 and the spectral Laplace solver.

Basis: real, fully normalized over the sphere (the square of every basis
function integrates to 1).  Coefficients are packed flat with index
l*l + l + m, m in [-l, l]; m > 0 are cosine terms, m < 0 sine terms.

The solver inverts (Laplace-Beltrami + 2) on S^2 degree by degree:
the operator acts on degree l as multiplication by 2 - l*(l+1), with the
degree-1 harmonics spanning its kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import (
    BandLimitExceeded,
    ChristoffelError,
    NotAnalyzed,
    OrthogonalityViolation,
)
from .sphere import SphereGrid, make_grid, point_coords, tangent_bases

DEFAULT_L_MAX = 32
DEFAULT_GRID_L = 48

# pole guard: below these sin(theta) values frame formulas lose accuracy and
# single-point derivatives switch to exact great-circle differentiation
_SIN_GUARD_GRAD = 1e-8
_SIN_GUARD_HESS = 1e-4


@dataclass(frozen=True)
class HarmonicCoeffs:
    """Real spherical-harmonic coefficients up to band limit L_max."""

    L_max: int
    c: np.ndarray  # flat, length (L_max + 1)**2

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.shape != ((self.L_max + 1) ** 2,):
            raise ValueError("coefficient array has wrong length for L_max")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "c", c)

    @staticmethod
    def index(l: int, m: int) -> int:
        return l * l + l + m

    def get(self, l: int, m: int) -> float:
        return float(self.c[self.index(l, m)])

    def degree_slice(self, l: int) -> slice:
        return slice(l * l, (l + 1) * (l + 1))


@dataclass(frozen=True)
class SphericalField:
    """Real function on S^2: grid samples plus optional coefficients."""

    grid: SphereGrid
    values: np.ndarray
    coeffs: HarmonicCoeffs | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.node_count,):
            raise ValueError("values length does not match grid node count")
        object.__setattr__(self, "values", v)

    @property
    def L_max(self):
        return None if self.coeffs is None else self.coeffs.L_max


def require_coeffs(f: SphericalField) -> HarmonicCoeffs:
    if f.coeffs is None:
        raise NotAnalyzed("field has no harmonic coefficients; analyze it first")
    return f.coeffs


# ----------------------------------------------------------------------
# Associated Legendre recursions (fully normalized, no Condon-Shortley)
# ----------------------------------------------------------------------

@lru_cache(maxsize=8)
def _pair_index(L_max: int):
    """Packed (m, l) pair layout, m-major with l ascending within each m.

    Returns (m_arr, l_arr, offsets, prev_col, cos_idx, sin_idx): prev_col is
    the packed column of (l-1, m) or -1, cos/sin_idx map pairs to flat
    coefficient indices (l, +-m).
    """
    ms, ls = [], []
    for m in range(L_max + 1):
        for l in range(m, L_max + 1):
            ms.append(m)
            ls.append(l)
    m_arr = np.array(ms, dtype=int)
    l_arr = np.array(ls, dtype=int)
    offsets = np.zeros(L_max + 2, dtype=int)
    for m in range(L_max + 1):
        offsets[m + 1] = offsets[m] + (L_max + 1 - m)
    prev = np.where(l_arr - 1 >= m_arr, np.arange(len(ms)) - 1, -1)
    cos_idx = l_arr * l_arr + l_arr + m_arr
    sin_idx = l_arr * l_arr + l_arr - m_arr
    return m_arr, l_arr, offsets, prev, cos_idx, sin_idx


def _legendre_packed(t: np.ndarray, L_max: int, nderiv: int = 0):
    """Normalized associated Legendre values in the packed pair layout.

    Returns ``nderiv + 1`` arrays of shape (n_pairs, len(t)) (pairs-major, so
    each pair is a contiguous row); derivatives are with respect to theta
    (t = cos theta).  Normalization: the basis function built from pair
    (l, m) and its azimuth factor has unit L^2 norm on the sphere.  The
    degree recursion is vectorized across all orders m one diagonal l - m
    at a time.
    """
    m_arr, l_arr, offsets, prev, _, _ = _pair_index(L_max)
    t = np.asarray(t, dtype=float)
    s = np.sqrt(np.maximum(0.0, 1.0 - t * t))
    n_pts = t.shape[0]
    P = np.empty((len(m_arr), n_pts))

    pmm = np.full(n_pts, np.sqrt(1.0 / (4.0 * np.pi)))
    P[offsets[0]] = pmm
    for m in range(1, L_max + 1):
        pmm = pmm * s * np.sqrt((2.0 * m + 1.0) / (2.0 * m))
        P[offsets[m]] = pmm
    if L_max >= 1:
        mv = np.arange(L_max)
        coef = np.sqrt(2.0 * mv + 3.0)
        P[offsets[mv] + 1] = coef[:, None] * t[None, :] * P[offsets[mv]]
    for k in range(2, L_max + 1):
        mv = np.arange(L_max - k + 1)
        lv = mv + k
        a = np.sqrt((4.0 * lv * lv - 1.0) / (lv * lv - mv * mv))
        b = np.sqrt(((lv - 1.0) ** 2 - mv * mv) / (4.0 * (lv - 1.0) ** 2 - 1.0))
        tgt = offsets[mv] + k
        P[tgt] = a[:, None] * (t[None, :] * P[tgt - 1] - b[:, None] * P[tgt - 2])
    if nderiv == 0:
        return (P,)

    # dP/dtheta = (l t P_l^m - c_lm P_{l-1}^m) / sin(theta)
    inv_s = np.where(s > 0, 1.0 / np.maximum(s, 1e-300), 0.0)
    Pprev = np.empty_like(P)
    valid = prev >= 0
    Pprev[valid] = P[prev[valid]]
    Pprev[~valid] = 0.0
    c_lm = np.sqrt(
        (2.0 * l_arr + 1.0) * (l_arr * l_arr - m_arr * m_arr)
        / np.maximum(2.0 * l_arr - 1.0, 1.0)
    )
    D1 = (l_arr[:, None] * t[None, :] * P - c_lm[:, None] * Pprev) * inv_s[None, :]
    if nderiv == 1:
        return (P, D1)

    # Legendre ODE in theta: P'' = -cot(theta) P' - (l(l+1) - m^2/sin^2) P
    cot = t * inv_s
    D2 = (
        -cot[None, :] * D1
        - (
            (l_arr * (l_arr + 1.0))[:, None]
            - (m_arr * m_arr)[:, None] * (inv_s * inv_s)[None, :]
        )
        * P
    )
    return (P, D1, D2)


def _legendre_blocks(t: np.ndarray, L_max: int, nderiv: int = 0):
    """Per-order views of :func:`_legendre_packed`: entry m is a tuple of
    ``nderiv + 1`` arrays of shape (len(t), L_max + 1 - m), column l - m."""
    packed = _legendre_packed(t, L_max, nderiv)
    offsets = _pair_index(L_max)[2]
    return [
        tuple(arr[offsets[m] : offsets[m + 1], :].T for arr in packed)
        for m in range(L_max + 1)
    ]


@lru_cache(maxsize=16)
def _grid_blocks(L: int, L_max: int, nderiv: int):
    grid = make_grid(L)
    return _legendre_blocks(grid.polar_nodes, L_max, nderiv)


def _azimuth_tables(phis: np.ndarray, L_max: int):
    """Cos/sin tables including the sqrt(2) factor for m > 0."""
    m = np.arange(L_max + 1)[:, None]
    arg = m * phis[None, :]
    cos_t = np.cos(arg)
    sin_t = np.sin(arg)
    scale = np.where(m > 0, np.sqrt(2.0), 1.0)
    return scale * cos_t, scale * sin_t


def _coeff_stacks(coeffs: HarmonicCoeffs):
    """Per-order coefficient vectors: (cos, sin) lists indexed by m."""
    L = coeffs.L_max
    cos_c, sin_c = [], []
    for m in range(L + 1):
        ls = np.arange(m, L + 1)
        cos_c.append(coeffs.c[ls * ls + ls + m])
        sin_c.append(coeffs.c[ls * ls + ls - m] if m > 0 else None)
    return cos_c, sin_c


def _synth_theta_stacks(blocks, cos_c, sin_c, L_max, deriv=0, lscale=None):
    """Contract Legendre blocks with coefficients over l.

    Returns (A, B) of shape (n_pts, L_max + 1): theta profiles multiplying
    the cos/sin azimuth rows.  ``lscale(l)`` optionally rescales degree l.
    """
    n_pts = blocks[0][0].shape[0]
    A = np.zeros((n_pts, L_max + 1))
    B = np.zeros((n_pts, L_max + 1))
    for m in range(L_max + 1):
        block = blocks[m][deriv]
        cc = cos_c[m]
        sc = sin_c[m]
        if lscale is not None:
            ls = np.arange(m, L_max + 1)
            w = lscale(ls)
            cc = cc * w
            sc = None if sc is None else sc * w
        A[:, m] = block @ cc
        if sc is not None:
            B[:, m] = block @ sc
    return A, B


# ----------------------------------------------------------------------
# Grid transforms
# ----------------------------------------------------------------------

def analyze(field: SphericalField, L_max: int | None = None) -> HarmonicCoeffs:
    """Forward transform by quadrature; exact for band-limited fields.

    Requires grid resolution L >= L_max + 1.
    """
    grid = field.grid
    if L_max is None:
        L_max = min(DEFAULT_L_MAX, grid.L - 1)
    if grid.L < L_max + 1:
        raise BandLimitExceeded(
            f"grid L={grid.L} cannot resolve L_max={L_max} (need L >= L_max + 1)"
        )
    n_phi = grid.azimuth_count
    vals = field.values.reshape(grid.L, n_phi)
    cos_t, sin_t = _azimuth_tables(grid.phis, L_max)
    w_phi = np.pi / grid.L
    Fc = vals @ cos_t.T * w_phi  # (L, L_max+1)
    Fs = vals @ sin_t.T * w_phi
    blocks = _grid_blocks(grid.L, L_max, 0)
    wt = grid.polar_weights
    c = np.zeros((L_max + 1) ** 2)
    for m in range(L_max + 1):
        ls = np.arange(m, L_max + 1)
        c[ls * ls + ls + m] = blocks[m][0].T @ (wt * Fc[:, m])
        if m > 0:
            c[ls * ls + ls - m] = blocks[m][0].T @ (wt * Fs[:, m])
    return HarmonicCoeffs(L_max=L_max, c=c)


def synthesize(coeffs: HarmonicCoeffs, grid: SphereGrid) -> SphericalField:
    """Evaluate the expansion on a grid; attaches the coefficients."""
    vals = _grid_eval(coeffs, grid, deriv=(0,))[0]
    return SphericalField(grid=grid, values=vals.ravel(), coeffs=coeffs)


def _grid_eval(coeffs, grid, deriv=(0,), lscale=None):
    """Evaluate theta/phi derivative combinations on a full grid.

    ``deriv`` entries: 0 value, 1 d/dtheta, 2 d2/dtheta2, 'phi' d/dphi,
    'phiphi' d2/dphi2, 'thetaphi' mixed.  Returns arrays (L, n_phi).
    """
    L_max = coeffs.L_max
    need2 = any(d in (2, "thetaphi") for d in deriv)
    need1 = need2 or any(d == 1 for d in deriv)
    blocks = _grid_blocks(grid.L, L_max, 2 if need2 else (1 if need1 else 0))
    cos_c, sin_c = _coeff_stacks(coeffs)
    cos_t, sin_t = _azimuth_tables(grid.phis, L_max)
    m_row = np.arange(L_max + 1)[:, None]
    out = []
    cache = {}

    def stacks(d):
        if d not in cache:
            cache[d] = _synth_theta_stacks(blocks, cos_c, sin_c, L_max, d, lscale)
        return cache[d]

    for d in deriv:
        if d in (0, 1, 2):
            A, B = stacks(d)
            out.append(A @ cos_t + B @ sin_t)
        elif d == "phi":
            A, B = stacks(0)
            out.append(B @ (m_row * cos_t) - A @ (m_row * sin_t))
        elif d == "phiphi":
            A, B = stacks(0)
            out.append(-(A @ (m_row**2 * cos_t) + B @ (m_row**2 * sin_t)))
        elif d == "thetaphi":
            A, B = stacks(1)
            out.append(B @ (m_row * cos_t) - A @ (m_row * sin_t))
        else:
            raise ValueError(f"unknown derivative tag {d!r}")
    return out


@lru_cache(maxsize=8)
def design_matrix(L: int, L_max: int) -> np.ndarray:
    """Basis evaluation matrix B with B[node, k] = Y_k(node) on make_grid(L).

    Column order matches the flat coefficient packing; synthesis is B @ c and
    quadrature analysis is B.T @ (weights * values).
    """
    grid = make_grid(L)
    blocks = _grid_blocks(L, L_max, 0)
    cos_t, sin_t = _azimuth_tables(grid.phis, L_max)
    n_phi = grid.azimuth_count
    B = np.empty((grid.node_count, (L_max + 1) ** 2))
    for m in range(L_max + 1):
        ls = np.arange(m, L_max + 1)
        cols = (blocks[m][0][:, None, :] * cos_t[m][None, :, None]).reshape(
            grid.node_count, len(ls)
        )
        B[:, ls * ls + ls + m] = cols
        if m > 0:
            cols = (blocks[m][0][:, None, :] * sin_t[m][None, :, None]).reshape(
                grid.node_count, len(ls)
            )
            B[:, ls * ls + ls - m] = cols
    return B


def bandlimit(field: SphericalField, L_max: int | None = None):
    """Analyze and re-synthesize a field at band limit L_max.

    Returns (band-limited field, max-norm truncation error on the grid).
    For band-limited inputs the error is at rounding level.
    """
    coeffs = analyze(field, L_max)
    out = synthesize(coeffs, field.grid)
    err = float(np.max(np.abs(out.values - field.values)))
    return out, err


def field_from_function(grid: SphereGrid, fn, L_max: int | None = None) -> SphericalField:
    """Sample fn(nodes) -> values on the grid and attach coefficients."""
    values = np.asarray(fn(grid.nodes), dtype=float)
    f = SphericalField(grid=grid, values=values)
    return SphericalField(grid=grid, values=values, coeffs=analyze(f, L_max))


# ----------------------------------------------------------------------
# Point evaluation and tangential derivatives
# ----------------------------------------------------------------------

def _points_angles(points):
    pts = np.asarray(points, dtype=float)
    theta = np.arccos(np.clip(pts[:, 2], -1.0, 1.0))
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    return pts, theta, phi


def _point_eval(coeffs, theta, phi, deriv=(0,)):
    """Same derivative tags as _grid_eval, at scattered (theta, phi).

    Packed evaluation: elementwise Legendre x gathered azimuth factors,
    contracted against gathered coefficient vectors in single matvecs.
    """
    L_max = coeffs.L_max
    need2 = any(d in (2, "thetaphi") for d in deriv)
    need1 = need2 or any(d == 1 for d in deriv)
    blocks = _legendre_blocks(np.cos(theta), L_max, 2 if need2 else (1 if need1 else 0))
    cos_c, sin_c = _coeff_stacks(coeffs)
    m = np.arange(L_max + 1)[None, :]
    scale = np.where(m > 0, np.sqrt(2.0), 1.0)
    cos_t = scale * np.cos(m * phi[:, None])  # (n_pts, L_max + 1)
    sin_t = scale * np.sin(m * phi[:, None])
    cache = {}

    def stacks(d):
        if d not in cache:
            cache[d] = _synth_theta_stacks(blocks, cos_c, sin_c, L_max, d)
        return cache[d]

    out = []
    for d in deriv:
        if d in (0, 1, 2):
            A, B = stacks(d)
            out.append(np.sum(A * cos_t + B * sin_t, axis=1))
        elif d == "phi":
            A, B = stacks(0)
            out.append(np.sum(m * (B * cos_t - A * sin_t), axis=1))
        elif d == "phiphi":
            A, B = stacks(0)
            out.append(-np.sum(m * m * (A * cos_t + B * sin_t), axis=1))
        elif d == "thetaphi":
            A, B = stacks(1)
            out.append(np.sum(m * (B * cos_t - A * sin_t), axis=1))
        else:
            raise ValueError(f"unknown derivative tag {d!r}")
    return out


# chunk size for scattered-point evaluation; keeps the per-order Legendre
# work arrays cache-friendly (~20 MB at L_max = 32)
_POINT_CHUNK = 4096


def _chunked_point_eval(coeffs, theta, phi, deriv):
    n = len(theta)
    if n <= _POINT_CHUNK:
        return _point_eval(coeffs, theta, phi, deriv)
    outs = [np.empty(n) for _ in deriv]
    for start in range(0, n, _POINT_CHUNK):
        sl = slice(start, min(start + _POINT_CHUNK, n))
        parts = _point_eval(coeffs, theta[sl], phi[sl], deriv)
        for o, p in zip(outs, parts):
            o[sl] = p
    return outs


def synthesize_at(coeffs: HarmonicCoeffs, points) -> np.ndarray:
    """Evaluate the expansion at arbitrary unit vectors, shape (N, 3)."""
    _, theta, phi = _points_angles(points)
    return _chunked_point_eval(coeffs, theta, phi, (0,))[0]


def _frame_vectors(theta, phi):
    st, ct = np.sin(theta), np.cos(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    e_th = np.stack([ct * cp, ct * sp, -st], axis=1)
    e_ph = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
    return e_th, e_ph


def _circle_samples(coeffs, x, d, K):
    ts = 2.0 * np.pi * np.arange(K) / K
    pts = np.outer(np.cos(ts), x) + np.outer(np.sin(ts), d)
    return synthesize_at(coeffs, pts)


def _circle_d1(vals):
    K = len(vals)
    F = np.fft.rfft(vals)
    k = np.arange(len(F))
    b = -2.0 * np.imag(F) / K
    return float(np.sum(k * b))


def _circle_d2(vals):
    K = len(vals)
    F = np.fft.rfft(vals)
    k = np.arange(len(F))
    a = 2.0 * np.real(F) / K
    a[0] *= 0.5
    if K % 2 == 0:
        a[-1] *= 0.5
    return float(-np.sum(k * k * a))


def gradient_at(coeffs: HarmonicCoeffs, points) -> np.ndarray:
    """Tangential (spherical) gradient as ambient 3-vectors, shape (N, 3).

    Differentiates the basis analytically; points within ~1e-8 of a pole
    fall back to exact great-circle spectral differentiation.
    """
    return values_and_gradient_at(coeffs, points)[1]


def values_and_gradient_at(coeffs: HarmonicCoeffs, points):
    """Field values and tangential gradients in one basis evaluation."""
    pts, theta, phi = _points_angles(points)
    st = np.sin(theta)
    safe = st > _SIN_GUARD_GRAD
    vals = np.empty(len(pts))
    grad = np.zeros_like(pts)
    if np.any(safe):
        v, dth, dph = _chunked_point_eval(coeffs, theta[safe], phi[safe], (0, 1, "phi"))
        vals[safe] = v
        e_th, e_ph = _frame_vectors(theta[safe], phi[safe])
        grad[safe] = e_th * dth[:, None] + e_ph * (dph / st[safe])[:, None]
    if not np.all(safe):
        K = 2 * coeffs.L_max + 2
        unsafe = np.nonzero(~safe)[0]
        vals[unsafe] = _chunked_point_eval(coeffs, theta[unsafe], phi[unsafe], (0,))[0]
        for i in unsafe:
            e1, e2 = tangent_bases(pts[i : i + 1])
            e1, e2 = e1[0], e2[0]
            g1 = _circle_d1(_circle_samples(coeffs, pts[i], e1, K))
            g2 = _circle_d1(_circle_samples(coeffs, pts[i], e2, K))
            grad[i] = g1 * e1 + g2 * e2
    return vals, grad


def hessian_at(coeffs: HarmonicCoeffs, points, bases=None) -> np.ndarray:
    """Covariant Hessian on S^2 in per-point tangent bases, shape (N, 2, 2).

    ``bases`` defaults to :func:`christoffel.sphere.tangent_bases` at the
    points.  The trace equals the Laplace-Beltrami operator of the field.
    """
    pts, theta, phi = _points_angles(points)
    if bases is None:
        bases = tangent_bases(pts)
    e1, e2 = bases
    st, ct = np.sin(theta), np.cos(theta)
    safe = st > _SIN_GUARD_HESS
    H = np.zeros((len(pts), 2, 2))
    if np.any(safe):
        idx = np.nonzero(safe)[0]
        dth, dph, dthth, dthph, dphph = _chunked_point_eval(
            coeffs, theta[idx], phi[idx], (1, "phi", 2, "thetaphi", "phiphi")
        )
        s, c = st[idx], ct[idx]
        h11 = dthth
        h12 = (dthph - (c / s) * dph) / s
        h22 = dphph / (s * s) + (c / s) * dth
        e_th, e_ph = _frame_vectors(theta[idx], phi[idx])
        # rotate (e_theta, e_phi) frame into the requested bases
        r11 = np.sum(e1[idx] * e_th, axis=1)
        r12 = np.sum(e1[idx] * e_ph, axis=1)
        r21 = np.sum(e2[idx] * e_th, axis=1)
        r22 = np.sum(e2[idx] * e_ph, axis=1)
        H[idx, 0, 0] = r11 * (r11 * h11 + r12 * h12) + r12 * (r11 * h12 + r12 * h22)
        H[idx, 0, 1] = r21 * (r11 * h11 + r12 * h12) + r22 * (r11 * h12 + r12 * h22)
        H[idx, 1, 0] = H[idx, 0, 1]
        H[idx, 1, 1] = r21 * (r21 * h11 + r22 * h12) + r22 * (r21 * h12 + r22 * h22)
    if not np.all(safe):
        K = 2 * coeffs.L_max + 2
        for i in np.nonzero(~safe)[0]:
            b1, b2 = e1[i], e2[i]
            h11 = _circle_d2(_circle_samples(coeffs, pts[i], b1, K))
            h22 = _circle_d2(_circle_samples(coeffs, pts[i], b2, K))
            diag = (b1 + b2) / np.sqrt(2.0)
            hdd = _circle_d2(_circle_samples(coeffs, pts[i], diag, K))
            h12 = hdd - 0.5 * (h11 + h22)
            H[i] = [[h11, h12], [h12, h22]]
    return H


def sphere_gradient(coeffs: HarmonicCoeffs, x) -> np.ndarray:
    """Spherical gradient at a single point, as an ambient tangent vector."""
    return gradient_at(coeffs, point_coords(x)[None, :])[0]


def sphere_hessian(coeffs: HarmonicCoeffs, x) -> np.ndarray:
    """Covariant Hessian at a single point, 2x2 in tangent_basis(x)."""
    return hessian_at(coeffs, point_coords(x)[None, :])[0]


def grid_gradient(field: SphericalField) -> np.ndarray:
    """Spherical gradient at every grid node, shape (N, 3)."""
    coeffs = require_coeffs(field)
    grid = field.grid
    dth, dph = _grid_eval(coeffs, grid, (1, "phi"))
    theta = np.repeat(grid.thetas, grid.azimuth_count)
    phi = np.tile(grid.phis, grid.L)
    e_th, e_ph = _frame_vectors(theta, phi)
    st = np.sin(theta)
    return e_th * dth.ravel()[:, None] + e_ph * (dph.ravel() / st)[:, None]


def grid_hessian(field: SphericalField, bases=None) -> np.ndarray:
    """Covariant Hessian at every grid node, shape (N, 2, 2).

    Grid nodes never sit at the poles, so the frame formulas apply directly.
    """
    coeffs = require_coeffs(field)
    grid = field.grid
    dth, dph, dthth, dthph, dphph = _grid_eval(
        coeffs, grid, (1, "phi", 2, "thetaphi", "phiphi")
    )
    theta = np.repeat(grid.thetas, grid.azimuth_count)
    phi = np.tile(grid.phis, grid.L)
    s, c = np.sin(theta), np.cos(theta)
    h11 = dthth.ravel()
    h12 = (dthph.ravel() - (c / s) * dph.ravel()) / s
    h22 = dphph.ravel() / (s * s) + (c / s) * dth.ravel()
    if bases is None:
        bases = tangent_bases(grid.nodes)
    e1, e2 = bases
    e_th, e_ph = _frame_vectors(theta, phi)
    r11 = np.sum(e1 * e_th, axis=1)
    r12 = np.sum(e1 * e_ph, axis=1)
    r21 = np.sum(e2 * e_th, axis=1)
    r22 = np.sum(e2 * e_ph, axis=1)
    H = np.empty((grid.node_count, 2, 2))
    H[:, 0, 0] = r11 * (r11 * h11 + r12 * h12) + r12 * (r11 * h12 + r12 * h22)
    H[:, 0, 1] = r21 * (r11 * h11 + r12 * h12) + r22 * (r11 * h12 + r12 * h22)
    H[:, 1, 0] = H[:, 0, 1]
    H[:, 1, 1] = r21 * (r21 * h11 + r22 * h12) + r22 * (r21 * h12 + r22 * h22)
    return H


def minus1_gradient_field(field: SphericalField) -> np.ndarray:
    """Ambient gradient of the degree-(-1) extension at every node, (N, 3).

    Row z equals grad_S f(z) - f(z) z; pairing it with a unit vector xi gives
    the directional derivative of f(y/|y|)/|y| along xi at z.
    """
    grad = grid_gradient(field)
    return grad - field.values[:, None] * field.grid.nodes


def apply_spectrum(coeffs: HarmonicCoeffs, fn) -> HarmonicCoeffs:
    """Multiply degree-l coefficients by fn(l)."""
    c = coeffs.c.copy()
    for l in range(coeffs.L_max + 1):
        c[l * l : (l + 1) * (l + 1)] *= fn(l)
    return HarmonicCoeffs(L_max=coeffs.L_max, c=c)


def laplacian_values(field: SphericalField) -> np.ndarray:
    """Laplace-Beltrami operator applied spectrally, sampled on the grid."""
    coeffs = require_coeffs(field)
    return synthesize(apply_spectrum(coeffs, lambda l: -l * (l + 1.0)), field.grid).values


# ----------------------------------------------------------------------
# Kernel orthogonality and the spectral solver
# ----------------------------------------------------------------------

def orthogonality_defect(f: SphericalField) -> np.ndarray:
    """Quadrature of (x_1 f, x_2 f, x_3 f) over the sphere, shape (3,)."""
    w = f.grid.weights * f.values
    return f.grid.nodes.T @ w


def degree1_magnitude(coeffs: HarmonicCoeffs) -> float:
    """L^2 norm of the degree-1 harmonic component."""
    return float(np.linalg.norm(coeffs.c[1:4]))


def project_out_linear(f: SphericalField) -> SphericalField:
    """Remove the degree-1 harmonic component from a field.

    The removed part is re-synthesized on the grid and subtracted from the
    sample values, so field = result + removed holds exactly in values.
    """
    grid = f.grid
    # degree-1 analysis only; cheap and needs no stored coefficients
    basis = np.stack(
        [_real_y1(grid.nodes, m) for m in (-1, 0, 1)], axis=1
    )  # (N, 3)
    c1 = basis.T @ (grid.weights * f.values)
    linear_vals = basis @ c1
    values = f.values - linear_vals
    coeffs = f.coeffs
    if coeffs is not None:
        c = coeffs.c.copy()
        c[1:4] = 0.0
        coeffs = HarmonicCoeffs(L_max=coeffs.L_max, c=c)
    return SphericalField(grid=grid, values=values, coeffs=coeffs)


def _real_y1(pts, m):
    # degree-1 real harmonics: sqrt(3/4pi) * (y, z, x) for m = -1, 0, 1
    k = np.sqrt(3.0 / (4.0 * np.pi))
    comp = {-1: 1, 0: 2, 1: 0}[m]
    return k * pts[:, comp]


def christoffel_residual(u: SphericalField, f: SphericalField) -> float:
    """Max-norm grid residual of (Laplacian + 2) u - f."""
    lap = laplacian_values(u)
    return float(np.max(np.abs(lap + 2.0 * u.values - f.values)))


def solve_christoffel(
    f: SphericalField, tol: float | None = None, project: bool = False
) -> SphericalField:
    """Solve (Laplacian + 2) u = f on S^2 spectrally.

    Degree-l coefficients are divided by 2 - l(l+1); the degree-1 component
    of the solution is set to zero (translation normalization).  The
    right-hand side must be orthogonal to the degree-1 harmonics: if its
    defect exceeds ``tol`` (default 1e-8 * max|f|) an OrthogonalityViolation
    is raised, unless ``project`` forces the defect to be projected away.
    """
    coeffs = require_coeffs(f)
    if tol is None:
        tol = 1e-8 * float(np.max(np.abs(f.values)))
    defect = orthogonality_defect(f)
    if np.max(np.abs(defect)) > tol and not project:
        raise OrthogonalityViolation(defect)
    rhs = project_out_linear(f) if project else f
    rhs_c = require_coeffs(rhs)
    c = rhs_c.c.copy()
    for l in range(rhs_c.L_max + 1):
        sl = slice(l * l, (l + 1) * (l + 1))
        if l == 1:
            c[sl] = 0.0
        else:
            c[sl] /= 2.0 - l * (l + 1.0)
    u = synthesize(HarmonicCoeffs(L_max=rhs_c.L_max, c=c), f.grid)
    res = christoffel_residual(u, rhs)
    if res > 10.0 * max(tol, 1e-14):
        raise ChristoffelError(
            f"spectral solve residual {res:.3e} exceeds 10*tol={10 * tol:.3e}"
        )
    return u
