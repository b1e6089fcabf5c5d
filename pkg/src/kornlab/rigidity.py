"""Constructor and certifier of extremal fields for planar rigidity.

Given a compactly supported angle field alpha and a far-field rotation R0,
the pipeline builds a deformation gradient of the form

    G(x) = R0 [ R(alpha(x)) + [[a(x), b(x)], [b(x), -a(x)]] ]

whose conformal part lies in SO(2) at every point, so the pointwise distance
to the rotation group is carried entirely by the anticonformal coefficients
(a, b).  Curl-freeness of G couples (a, b) to alpha through the first-order
system

    curl g = div f,   div g = curl f,      g = (a, b),
    f = (sin alpha, cos alpha - 1),

solved per frequency in Fourier space.  For such fields the squared distance
of G to its best constant rotation equals exactly twice the integrated
squared pointwise distance to SO(2) -- the equality case of the rigidity
estimate with constant sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mat2
from .errors import CurlResidualTooLarge, ZeroDistance
from .gridfield import (
    CURL_TOL,
    MatrixField2,
    PeriodicGrid,
    ScalarField,
    VectorField2,
    assert_compact_support,
    potential_from_gradient,
)

#: Threshold on rhs below which the field counts as a rotation a.e.
ZERO_DISTANCE_EPS = 1e-20


@dataclass
class ExtremalReport:
    """Certificate quantities for a candidate gradient field."""

    curl_residual: float
    optimal_theta: float
    lhs: float            # integral of |G - R*|^2, R* the best rotation
    rhs: float            # integral of dist^2(G, SO(2))
    ratio: float          # lhs / (2 rhs)
    alpha_norm: float | None = None
    f_norm: float | None = None
    g_norm: float | None = None
    theta0: float | None = None          # far-field angle, when known
    lhs_at_theta0: float | None = None   # integral of |G - R(theta0)|^2
    ratio_at_theta0: float | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


@dataclass
class ExtremalField:
    """Deformation split into a mean-zero periodic part plus affine metadata.

    The full gradient is ``affine + grad(periodic)``; the affine matrix is
    the grid mean of the synthesized gradient (approximately the far-field
    rotation, since the construction data are compactly supported).
    """

    periodic: VectorField2
    affine: np.ndarray = field(default_factory=lambda: np.eye(2))

    def gradient(self) -> MatrixField2:
        G = self.periodic.grad()
        return MatrixField2(G.grid, G.values + self.affine[:, :, None, None])


def build_f(alpha: ScalarField) -> VectorField2:
    """Pointwise lift f = (sin alpha, cos alpha - 1).

    |f|^2 = 2 - 2 cos(alpha) <= alpha^2 pointwise, so ||f|| <= ||alpha||.
    """
    return VectorField2(
        alpha.grid, np.stack([np.sin(alpha.values), np.cos(alpha.values) - 1.0])
    )


def solve_g(f: VectorField2) -> VectorField2:
    """Solve curl g = div f, div g = curl f by a per-frequency reflection.

    With xi_perp = (-xi_2, xi_1) the system pins the components of g-hat
    along the orthonormal frame (xi-hat, xi-hat-perp):

        <g-hat, xi_perp> = <f-hat, xi>,   <g-hat, xi> = <f-hat, xi_perp>,

    i.e. g-hat = <f-hat, xi_perp> xi-hat + <f-hat, xi> xi-hat-perp, a real
    orthogonal (reflection) multiplier; hence ||g|| = ||f|| exactly.  The
    multiplier has no limit at frequency zero; the zero mode is completed
    with its x-axis limit [[0, 1], [1, 0]], which keeps the map an isometry
    (any unimodular completion solves the system, since constants are
    annihilated by curl and div).
    """
    g = f.grid
    fhat = np.fft.fft2(f.values, axes=(-2, -1))
    k2 = g.kx**2 + g.ky**2
    k2safe = np.where(k2 == 0.0, 1.0, k2)
    # Reflection matrix [[-c2, c1], [c1, c2]] with c1 = (kx^2-ky^2)/|k|^2,
    # c2 = 2 kx ky / |k|^2; at k = 0 use the x-axis limit c1 = 1, c2 = 0.
    c1 = np.where(k2 == 0.0, 1.0, (g.kx**2 - g.ky**2) / k2safe)
    c2 = np.where(k2 == 0.0, 0.0, 2.0 * g.kx * g.ky / k2safe)
    # The unpaired Nyquist lines have no conjugate partner, so the generic
    # multiplier would break the realness of g there.  The derivative
    # operators see those lines with the offending wavenumber zeroed; the
    # matching multiplier is the (sign-adjusted) component swap, which keeps
    # curl g = div f and div g = curl f exact for the module's operators and
    # the map an isometry.  Resolved fields carry no such content anyway.
    nyq_x = g.kx == g.kx.min()
    nyq_y = g.ky == g.ky.min()
    c1 = np.where(nyq_y, 1.0, c1)
    c2 = np.where(nyq_y, 0.0, c2)
    c1 = np.where(nyq_x, -1.0, c1)
    c2 = np.where(nyq_x, 0.0, c2)
    ghat = np.stack([-c2 * fhat[0] + c1 * fhat[1], c1 * fhat[0] + c2 * fhat[1]])
    return VectorField2(g, np.fft.ifft2(ghat, axes=(-2, -1)).real)


def assemble_gradient(
    alpha: ScalarField,
    g: VectorField2,
    r0: mat2.Rotation = mat2.Rotation(0.0),
    tol: float = CURL_TOL,
) -> MatrixField2:
    """Pointwise gradient R0 (R(alpha) + [[a, b], [b, -a]]) with g = (a, b).

    Left-multiplying by the constant rotation R0 keeps the conformal part in
    SO(2) and rotates the anticonformal coefficient vector by R0.  The
    consistency of (alpha, g) is re-checked through the row curls.
    """
    grid = alpha.grid
    ca, sa = np.cos(alpha.values), np.sin(alpha.values)
    a, b = g.values
    base = np.stack([
        np.stack([ca + a, -sa + b]),
        np.stack([sa + b, ca - a]),
    ])
    R0 = r0.as_array()
    values = np.einsum("ik,kjxy->ijxy", R0, base)
    G = MatrixField2(grid, values)
    res = G.row_curl_residual()
    if res > tol:
        raise CurlResidualTooLarge(res, tol)
    return G


def dist_so2_squared_values(G: MatrixField2) -> np.ndarray:
    v = G.values
    return mat2.dist_so2_arrays(v[0, 0], v[0, 1], v[1, 0], v[1, 1]) ** 2


def rigidity_ratio(G: MatrixField2, curl_tol: float = CURL_TOL) -> ExtremalReport:
    """Certificate for a gradient field: best rotation, both sides, ratio.

    The minimizer of the integral of |G - R|^2 over SO(2) depends only on
    the mean of G: it is the closest rotation to the conformal part of the
    mean.  Raises :class:`ZeroDistance` when G is a rotation field a.e.
    (the rigidity quotient is then 0/0).
    """
    res = G.row_curl_residual()
    if res > curl_tol:
        raise CurlResidualTooLarge(res, curl_tol)

    area = G.grid.cell_area
    dist2 = dist_so2_squared_values(G)
    rhs = float(area * dist2.sum())

    mean = mat2.Mat2.from_array(G.mean())
    rstar = mat2.closest_rotation(mean)
    lhs = _lhs_at(G, rstar.theta)

    if rhs <= ZERO_DISTANCE_EPS * max(1.0, lhs):
        raise ZeroDistance(
            "the field is a rotation almost everywhere; "
            "dist(grad u, SO(2)) vanishes and the ratio is undefined"
        )
    return ExtremalReport(
        curl_residual=res,
        optimal_theta=rstar.theta,
        lhs=lhs,
        rhs=rhs,
        ratio=lhs / (2.0 * rhs),
    )


def _lhs_at(G: MatrixField2, theta: float) -> float:
    c, s = math.cos(theta), math.sin(theta)
    R = np.array([[c, -s], [s, c]])
    diff = G.values - R[:, :, None, None]
    return float(G.grid.cell_area * (diff**2).sum())


def synthesize_extremal(
    alpha: ScalarField, r0: mat2.Rotation = mat2.Rotation(0.0)
) -> tuple[ExtremalField, ExtremalReport]:
    """Full pipeline: alpha -> f -> g -> gradient -> potential -> certificate.

    Requires alpha to satisfy the compact-support convention.  The returned
    report carries the pipeline norms and, since the far-field rotation is
    known here, the left-hand side measured against it as well.
    """
    assert_compact_support(alpha)
    f = build_f(alpha)
    g = solve_g(f)
    G = assemble_gradient(alpha, g, r0)

    report = rigidity_ratio(G)

    u = potential_from_gradient(G)
    extremal = ExtremalField(periodic=u, affine=G.mean())

    report.alpha_norm = alpha.norm_l2()
    report.f_norm = f.norm_l2()
    report.g_norm = g.norm_l2()
    report.theta0 = r0.theta
    report.lhs_at_theta0 = _lhs_at(G, r0.theta)
    report.ratio_at_theta0 = report.lhs_at_theta0 / (2.0 * report.rhs)
    return extremal, report


# ---------------------------------------------------------------------------
# Analytic angle profiles.
# ---------------------------------------------------------------------------

def gaussian_bump(
    grid: PeriodicGrid,
    amplitude: float = 1.0,
    width: float = 1.0,
    center: tuple[float, float] = (0.0, 0.0),
) -> ScalarField:
    """Radial Gaussian bump alpha = amplitude * exp(-|x - c|^2 / (2 width^2))."""
    cx, cy = center
    r2 = (grid.x - cx) ** 2 + (grid.y - cy) ** 2
    return ScalarField(grid, amplitude * np.exp(-r2 / (2.0 * width**2)))


def dipole_bump(
    grid: PeriodicGrid,
    amplitude: float = 1.0,
    width: float = 0.8,
    offset: tuple[float, float] = (1.25, 0.0),
) -> ScalarField:
    """Odd pair of Gaussian lobes at +/- offset: alpha(-x) = -alpha(x).

    The point symmetry makes the integral of sin(alpha) vanish, so the best
    rotation of the synthesized gradient coincides with the far-field
    rotation instead of being tilted by the O(1/L^2) mean of f.
    """
    ox, oy = offset
    pos = np.exp(-((grid.x - ox) ** 2 + (grid.y - oy) ** 2) / (2.0 * width**2))
    neg = np.exp(-((grid.x + ox) ** 2 + (grid.y + oy) ** 2) / (2.0 * width**2))
    return ScalarField(grid, amplitude * (pos - neg))
