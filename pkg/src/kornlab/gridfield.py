"""Spectral calculus on a periodic N x N grid.

The grid covers the centered square [-L/2, L/2)^2 with n samples per axis
(n a power of two).  Fields that decay to machine zero inside a margin of
width L/8 from the box boundary behave like compactly supported fields on
the whole plane; :func:`assert_compact_support` makes that hypothesis
checkable.

Conventions, fixed once and asserted in the tests:

* forward FFT unnormalized, inverse carries 1/n^2 (numpy's default), so
  Plancherel reads ||field||_2^2 = (dx^2 / n^2) * sum |coeff|^2;
* spectral derivatives multiply the coefficient at frequency k by i*k and
  zero the unpaired Nyquist line so derivatives of real fields stay real;
* quadrature is dx^2 times the sample sum (exact for band-limited fields).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CurlResidualTooLarge

#: Default relative row-curl tolerance for "this matrix field is a gradient".
CURL_TOL = 1e-8

#: Margin width (as a fraction of L) and mass bound of the support check.
SUPPORT_MARGIN_FRACTION = 0.125
SUPPORT_MASS_BOUND = 1e-10


class PeriodicGrid:
    """Uniform periodic grid on the centered square of side ``length``."""

    def __init__(self, n: int, length: float):
        n = int(n)
        if n < 4 or (n & (n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 4, got {n}")
        if not (length > 0.0) or not math.isfinite(length):
            raise ValueError(f"box length must be positive and finite, got {length}")
        self.n = n
        self.length = float(length)
        self.spacing = self.length / n

        coords1d = self.spacing * np.arange(n) - self.length / 2.0
        self.x, self.y = np.meshgrid(coords1d, coords1d, indexing="ij")

        k1d = 2.0 * math.pi * np.fft.fftfreq(n, d=self.spacing)
        self.kx, self.ky = np.meshgrid(k1d, k1d, indexing="ij")

        # Derivative multipliers: the frequency -n/2 has no conjugate partner,
        # so its coefficient is dropped to keep derivatives of real data real.
        dk1d = k1d.copy()
        dk1d[n // 2] = 0.0
        self.dkx, self.dky = np.meshgrid(dk1d, dk1d, indexing="ij")

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PeriodicGrid)
            and self.n == other.n
            and self.length == other.length
        )

    def __hash__(self):
        return hash((self.n, self.length))

    def __repr__(self):
        return f"PeriodicGrid(n={self.n}, length={self.length})"


def _check_values(grid: PeriodicGrid, values: np.ndarray, lead: tuple) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    want = lead + (grid.n, grid.n)
    if values.shape != want:
        raise ValueError(f"expected value shape {want}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("field contains non-finite samples")
    return values


@dataclass
class Spectrum:
    """Complex Fourier coefficients of a real field, numpy fft2 layout."""

    grid: PeriodicGrid
    coeffs: np.ndarray  # (..., n, n) complex

    def norm(self) -> float:
        """L2 norm of the underlying field via Plancherel."""
        total = np.sum(np.abs(self.coeffs) ** 2)
        return math.sqrt(self.grid.cell_area * total) / self.grid.n

    def to_values(self) -> np.ndarray:
        return np.fft.ifft2(self.coeffs, axes=(-2, -1)).real


class ScalarField:
    def __init__(self, grid: PeriodicGrid, values):
        self.grid = grid
        self.values = _check_values(grid, values, ())

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn) -> "ScalarField":
        return cls(grid, fn(grid.x, grid.y))

    def spectrum(self) -> Spectrum:
        return Spectrum(self.grid, np.fft.fft2(self.values))

    def integrate(self) -> float:
        return float(self.grid.cell_area * self.values.sum())

    def mean(self) -> float:
        return float(self.values.mean())

    def norm_l2(self) -> float:
        return math.sqrt(self.grid.cell_area * float((self.values**2).sum()))

    def grad(self) -> "VectorField2":
        g = self.grid
        fhat = np.fft.fft2(self.values)
        dx = np.fft.ifft2(1j * g.dkx * fhat).real
        dy = np.fft.ifft2(1j * g.dky * fhat).real
        return VectorField2(g, np.stack([dx, dy]))


class VectorField2:
    def __init__(self, grid: PeriodicGrid, values):
        self.grid = grid
        self.values = _check_values(grid, values, (2,))

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn) -> "VectorField2":
        u1, u2 = fn(grid.x, grid.y)
        return cls(grid, np.stack([np.broadcast_to(u1, grid.x.shape),
                                   np.broadcast_to(u2, grid.x.shape)]))

    def spectrum(self) -> Spectrum:
        return Spectrum(self.grid, np.fft.fft2(self.values, axes=(-2, -1)))

    def integrate(self) -> np.ndarray:
        return self.grid.cell_area * self.values.sum(axis=(-2, -1))

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=(-2, -1))

    def norm_l2(self) -> float:
        return math.sqrt(self.grid.cell_area * float((self.values**2).sum()))

    def grad(self) -> "MatrixField2":
        """Gradient G with G[i, j] = d_j u_i."""
        g = self.grid
        uhat = np.fft.fft2(self.values, axes=(-2, -1))
        rows = []
        for i in range(2):
            gx = np.fft.ifft2(1j * g.dkx * uhat[i]).real
            gy = np.fft.ifft2(1j * g.dky * uhat[i]).real
            rows.append(np.stack([gx, gy]))
        return MatrixField2(g, np.stack(rows))

    def div(self) -> ScalarField:
        g = self.grid
        uhat = np.fft.fft2(self.values, axes=(-2, -1))
        out = np.fft.ifft2(1j * g.dkx * uhat[0] + 1j * g.dky * uhat[1]).real
        return ScalarField(g, out)

    def curl(self) -> ScalarField:
        """Scalar curl d_1 u_2 - d_2 u_1."""
        g = self.grid
        uhat = np.fft.fft2(self.values, axes=(-2, -1))
        out = np.fft.ifft2(1j * g.dkx * uhat[1] - 1j * g.dky * uhat[0]).real
        return ScalarField(g, out)


class MatrixField2:
    def __init__(self, grid: PeriodicGrid, values):
        self.grid = grid
        self.values = _check_values(grid, values, (2, 2))

    @classmethod
    def constant(cls, grid: PeriodicGrid, matrix) -> "MatrixField2":
        m = np.asarray(matrix, dtype=float)
        return cls(grid, np.broadcast_to(m[:, :, None, None], (2, 2, grid.n, grid.n)).copy())

    def integrate(self) -> np.ndarray:
        return self.grid.cell_area * self.values.sum(axis=(-2, -1))

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=(-2, -1))

    def norm_l2(self) -> float:
        return math.sqrt(self.grid.cell_area * float((self.values**2).sum()))

    def row(self, i: int) -> VectorField2:
        return VectorField2(self.grid, self.values[i])

    def det_values(self) -> np.ndarray:
        v = self.values
        return v[0, 0] * v[1, 1] - v[0, 1] * v[1, 0]

    def row_curl_residual(self) -> float:
        """Max over rows of ||curl(row)||_2, relative to the derivative scale.

        Zero (to roundoff) exactly when the field is a spectral gradient.
        """
        scale = 0.0
        worst = 0.0
        for i in range(2):
            row = self.row(i)
            worst = max(worst, row.curl().norm_l2())
            scale += row.grad().norm_l2()
        return worst / max(scale, 1e-300)


def integrate(field) -> float | np.ndarray:
    return field.integrate()


def helmholtz(z: VectorField2) -> tuple[VectorField2, VectorField2]:
    """Orthogonal splitting z = gradient_part + divfree_part + mean(z).

    Both returned parts have zero mean; the gradient part is curl-free and
    the second part divergence-free, spectrally.  The projection uses the
    same derivative wavenumbers as grad/div/curl (Nyquist line dropped), so
    the advertised identities hold exactly for the module's own operators.
    Content invisible to the derivatives (the unpaired pure-Nyquist corner
    modes) is carried by the gradient part, which keeps the decomposition
    idempotent and exactly recomposable; resolved fields have none.
    """
    g = z.grid
    zhat = np.fft.fft2(z.values, axes=(-2, -1))
    dk2 = g.dkx**2 + g.dky**2
    dk2safe = np.where(dk2 == 0.0, 1.0, dk2)
    dot_k = (g.dkx * zhat[0] + g.dky * zhat[1]) / dk2safe
    grad_hat = np.stack([g.dkx * dot_k, g.dky * dot_k])
    derivative_blind = dk2 == 0.0
    grad_hat[:, derivative_blind] = zhat[:, derivative_blind]
    div_hat = zhat - grad_hat
    grad_hat[:, 0, 0] = 0.0
    div_hat[:, 0, 0] = 0.0
    grad_part = np.fft.ifft2(grad_hat, axes=(-2, -1)).real
    div_part = np.fft.ifft2(div_hat, axes=(-2, -1)).real
    return VectorField2(g, grad_part), VectorField2(g, div_part)


def potential_from_gradient(G: MatrixField2, tol: float = CURL_TOL) -> VectorField2:
    """Mean-zero periodic u with grad(u) = G - mean(G).

    The constant part of G is the gradient of an affine map, which does not
    live on the torus; callers keep mean(G) as separate metadata.  Raises
    :class:`CurlResidualTooLarge` when G is not a gradient.
    """
    res = G.row_curl_residual()
    if res > tol:
        raise CurlResidualTooLarge(res, tol)
    g = G.grid
    dk2 = g.dkx**2 + g.dky**2
    dk2safe = np.where(dk2 == 0.0, 1.0, dk2)
    rows = []
    for i in range(2):
        ghat = np.fft.fft2(G.values[i], axes=(-2, -1))
        uhat = (g.dkx * ghat[0] + g.dky * ghat[1]) / (1j * dk2safe)
        uhat = np.where(dk2 == 0.0, 0.0, uhat)
        rows.append(np.fft.ifft2(uhat).real)
    return VectorField2(g, np.stack(rows))


def det_integral(G: MatrixField2, tol: float = CURL_TOL) -> float:
    """Integral of det G for a gradient field G.

    For G = grad(u) with u effectively supported away from the box boundary
    (or indeed any periodic u) the determinant is a null Lagrangian and the
    integral vanishes.  Raises :class:`CurlResidualTooLarge` when the row
    curls show G is not a gradient.
    """
    res = G.row_curl_residual()
    if res > tol:
        raise CurlResidualTooLarge(res, tol)
    return float(G.grid.cell_area * G.det_values().sum())


def scaling_sequence(u: VectorField2, k: int) -> VectorField2:
    """Integer dilation u_k(x) = u(k x) of a compactly supported field.

    In two dimensions the dilation carries no amplitude factor, and both the
    gradient and symmetric-gradient L2 norms are preserved: the k^2 gradient
    growth cancels against the k^-2 Jacobian of the substitution.  Support
    shrinks by the factor k.  Points with k x outside the box map to zero,
    which is exact when u satisfies the compact-support convention; only the
    central copy is kept (no torus wrap-around, which would replicate the
    field k^2 times and inflate the norms).
    """
    k = int(k)
    if k < 1:
        raise ValueError(f"dilation factor must be a positive integer, got {k}")
    n = u.grid.n
    # x_i = i*dx - L/2, so k*x_i lands on grid index k*i - (k-1)*n/2.
    idx = k * np.arange(n) - (k - 1) * (n // 2)
    valid = (idx >= 0) & (idx < n)
    safe = np.clip(idx, 0, n - 1)
    out = u.values[:, safe[:, None], safe[None, :]].copy()
    mask = valid[:, None] & valid[None, :]
    out *= mask
    return VectorField2(u.grid, out)


def support_margin_mass(field) -> float:
    """Relative L2 mass inside the margin of width L/8 along the box boundary."""
    g = field.grid
    margin = SUPPORT_MARGIN_FRACTION * g.length
    edge = g.length / 2.0 - margin
    mask = (np.abs(g.x) >= edge) | (np.abs(g.y) >= edge)
    v2 = field.values**2
    total = float(v2.sum())
    if total == 0.0:
        return 0.0
    tail = float((v2 * mask).sum())
    return math.sqrt(tail / total)


def assert_compact_support(field, bound: float = SUPPORT_MASS_BOUND) -> None:
    mass = support_margin_mass(field)
    if mass > bound:
        raise ValueError(
            f"field is not compactly supported on the grid: relative L2 mass "
            f"{mass:.3e} within the boundary margin exceeds {bound:.1e}"
        )


# ---------------------------------------------------------------------------
# Serialization: JSON header plus a flat binary or CSV payload of row-major
# samples, component blocks in order.
# ---------------------------------------------------------------------------

_FIELD_KINDS = {1: ScalarField, 2: VectorField2, 4: MatrixField2}


def save_field(field, path, fmt: str = "bin") -> None:
    """Write a field as ``path`` (JSON header) plus a sibling payload file."""
    path = Path(path)
    comps = int(np.prod(field.values.shape[:-2], dtype=int))
    flat = field.values.reshape(comps, field.grid.n, field.grid.n)
    if fmt == "bin":
        data_name = path.stem + ".bin"
        flat.astype("<f8").tofile(path.with_name(data_name))
    elif fmt == "csv":
        data_name = path.stem + ".csv"
        with open(path.with_name(data_name), "w", newline="") as fh:
            writer = csv.writer(fh)
            for block in flat:
                writer.writerows(block.tolist())
    else:
        raise ValueError(f"unknown field format {fmt!r}")
    header = {
        "n": field.grid.n,
        "L": field.grid.length,
        "components": comps,
        "dtype": "float64",
        "order": "row-major",
        "format": fmt,
        "data": data_name,
    }
    path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")


def load_field(path):
    """Read a field written by :func:`save_field`; kind follows ``components``."""
    path = Path(path)
    header = json.loads(path.read_text())
    for key in ("n", "L", "components", "format", "data"):
        if key not in header:
            raise ValueError(f"field header misses required key {key!r}")
    comps = int(header["components"])
    if comps not in _FIELD_KINDS:
        raise ValueError(f"unsupported component count {comps}")
    grid = PeriodicGrid(int(header["n"]), float(header["L"]))
    data_path = path.with_name(header["data"])
    if header["format"] == "bin":
        raw = np.fromfile(data_path, dtype="<f8")
    elif header["format"] == "csv":
        with open(data_path, newline="") as fh:
            raw = np.array([[float(v) for v in row] for row in csv.reader(fh)])
        raw = raw.reshape(-1)
    else:
        raise ValueError(f"unknown field format {header['format']!r}")
    if raw.size != comps * grid.n**2:
        raise ValueError(
            f"payload holds {raw.size} samples, expected {comps * grid.n ** 2}"
        )
    shape = {1: (), 2: (2,), 4: (2, 2)}[comps] + (grid.n, grid.n)
    return _FIELD_KINDS[comps](grid, raw.reshape(shape))
