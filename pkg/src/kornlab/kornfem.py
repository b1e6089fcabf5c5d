"""P1 finite-element estimator of optimal Korn constants in 2D.

The discrete problem maximizes the Rayleigh quotient of the pair

    A~ (gradient energy, corrected for the skew modes tangential on the
        boundary) over B (symmetric-gradient energy)

on the subspace of vector P1 fields satisfying the boundary conditions:
``dirichlet`` pins every boundary vertex; ``tangential`` constrains boundary
vertices to slide along the boundary (corners get pinned).  Every reported
value is the Rayleigh quotient of an explicit admissible discrete field and
therefore a certified lower bound for the discrete maximum, which in turn
bounds the domain's Korn constant squared from below.

Element matrices use one-point quadrature, which is exact for P1: all three
quadratic forms have piecewise-constant integrands.  In particular the
null-Lagrangian matrix identity 2B = A + C holds to machine precision on
Dirichlet-constrained degrees of freedom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh

from .errors import InfiniteQuotient, MeshValidationError, SolverFailure
from .mesh import TriMesh, annulus, disk, unit_square

#: Boundary vertices whose adjacent edge normals differ by more than this
#: angle (radians) are treated as corners and pinned.
CORNER_ANGLE = 0.35

#: Normalized boundary misfit below which a rotational symmetry is accepted.
ROTATION_TOL = 1e-8

#: Relative width of the top eigenvalue cluster for multiplicity reporting.
CLUSTER_WIDTH = 1e-6


# ---------------------------------------------------------------------------
# Assembly.
# ---------------------------------------------------------------------------

@dataclass
class AssembledForms:
    """Sparse quadratic forms on the full vector P1 space (dof = 2*vertex+comp).

    grad:   integral of grad u : grad v
    symgrad: integral of D(u) : D(v)
    divdiv: integral of (div u)(div v)
    """

    grad: sp.csr_matrix
    symgrad: sp.csr_matrix
    divdiv: sp.csr_matrix
    area: float
    curl_vec: np.ndarray  # linear functional u -> integral of (d1 u2 - d2 u1)


def _shape_gradients(mesh: TriMesh):
    """Per-triangle P1 shape-function gradients and areas, vectorized."""
    v = mesh.vertices
    t = mesh.triangles
    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    e1 = p1 - p0
    e2 = p2 - p0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(det <= 0.0):
        raise MeshValidationError("degenerate or misoriented triangle in assembly")
    # Gradients of barycentric coordinates: rows of inv([e1 e2])^T for the
    # last two; the first is minus their sum.
    g1 = np.stack([e2[:, 1], -e2[:, 0]], axis=1) / det[:, None]
    g2 = np.stack([-e1[:, 1], e1[:, 0]], axis=1) / det[:, None]
    g0 = -(g1 + g2)
    grads = np.stack([g0, g1, g2], axis=1)  # (T, 3, 2)
    return grads, 0.5 * det


def assemble(mesh: TriMesh) -> AssembledForms:
    grads, areas = _shape_gradients(mesh)
    T = len(mesh.triangles)

    # Local dof order: (vertex 0..2) x (component 0..1) -> 6 dofs.
    # grad u : grad v  ->  delta_cd * (G_i . G_j)
    gg = np.einsum("tia,tja->tij", grads, grads)  # (T, 3, 3)
    A_loc = np.zeros((T, 6, 6))
    S_loc = np.zeros((T, 6, 6))  # integral of grad u : (grad v)^T
    C_loc = np.zeros((T, 6, 6))
    for c in range(2):
        for d in range(2):
            block = np.s_[:, c::2, d::2]  # local dofs (i, c) x (j, d)
            if c == d:
                A_loc[block] += gg
            S_loc[block] += np.einsum("ti,tj->tij", grads[:, :, d], grads[:, :, c])
            C_loc[block] += np.einsum("ti,tj->tij", grads[:, :, c], grads[:, :, d])
    A_loc *= areas[:, None, None]
    S_loc *= areas[:, None, None]
    C_loc *= areas[:, None, None]
    B_loc = 0.5 * (A_loc + S_loc)

    dof = np.empty((T, 6), dtype=np.int64)
    for i in range(3):
        for c in range(2):
            dof[:, 2 * i + c] = 2 * mesh.triangles[:, i] + c
    rows = np.repeat(dof, 6, axis=1).ravel()
    cols = np.tile(dof, (1, 6)).ravel()
    ndof = 2 * len(mesh.vertices)

    def build(local):
        m = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(ndof, ndof))
        return m.tocsr()

    # Curl functional: integral of (d1 u2 - d2 u1).
    curl = np.zeros(ndof)
    np.add.at(curl, 2 * mesh.triangles + 1, areas[:, None] * grads[:, :, 0])
    np.add.at(curl, 2 * mesh.triangles, -areas[:, None] * grads[:, :, 1])

    return AssembledForms(
        grad=build(A_loc),
        symgrad=build(B_loc),
        divdiv=build(C_loc),
        area=float(areas.sum()),
        curl_vec=curl,
    )


# ---------------------------------------------------------------------------
# Constraints.
# ---------------------------------------------------------------------------

@dataclass
class ConstraintSet:
    """Per-boundary-vertex constraints plus the constrained-space basis.

    ``kinds`` maps boundary vertex -> ("pinned", None) or
    ("normal", unit normal).  ``basis`` is the sparse (2V, m) matrix whose
    orthonormal columns span the admissible space: two unit columns per free
    vertex, a single tangent column per normal-constrained vertex, none for
    pinned vertices.
    """

    kinds: dict[int, tuple[str, np.ndarray | None]]
    basis: sp.csr_matrix
    bc: str

    @property
    def dof_count(self) -> int:
        return self.basis.shape[1]


def _vertex_normals(mesh: TriMesh):
    """Adjacent boundary-edge normals per boundary vertex (one or two)."""
    per_vertex: dict[int, list[np.ndarray]] = {}
    for (a, b), n in zip(mesh.boundary_edges, mesh.boundary_normals):
        per_vertex.setdefault(int(a), []).append(n)
        per_vertex.setdefault(int(b), []).append(n)
    return per_vertex


def _build_basis(nverts: int, kinds: dict[int, tuple[str, np.ndarray | None]]) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    col = 0
    for v in range(nverts):
        kind = kinds.get(v)
        if kind is None:
            for c in range(2):
                rows.append(2 * v + c)
                cols.append(col)
                vals.append(1.0)
                col += 1
        elif kind[0] == "normal":
            n = kind[1]
            tangent = np.array([-n[1], n[0]])
            rows.extend([2 * v, 2 * v + 1])
            cols.extend([col, col])
            vals.extend([tangent[0], tangent[1]])
            col += 1
        # pinned: no column
    return sp.csr_matrix((vals, (rows, cols)), shape=(2 * nverts, col))


def tangential_constraints(mesh: TriMesh, corner_angle: float = CORNER_ANGLE) -> ConstraintSet:
    """Slip conditions u . n = 0: corners pinned, other boundary vertices
    constrained along the bisector of their adjacent edge normals."""
    kinds: dict[int, tuple[str, np.ndarray | None]] = {}
    for v, normals in _vertex_normals(mesh).items():
        if len(normals) == 1:
            kinds[v] = ("normal", normals[0])
            continue
        n1, n2 = normals[0], normals[1]
        angle = math.atan2(abs(n1[0] * n2[1] - n1[1] * n2[0]), float(n1 @ n2))
        if angle > corner_angle:
            kinds[v] = ("pinned", None)
        else:
            s = n1 + n2
            norm = np.linalg.norm(s)
            if norm == 0.0:  # antipodal normals: slit-like corner
                kinds[v] = ("pinned", None)
            else:
                kinds[v] = ("normal", s / norm)
    return ConstraintSet(kinds, _build_basis(len(mesh.vertices), kinds), "tangential")


def dirichlet_constraints(mesh: TriMesh) -> ConstraintSet:
    kinds = {int(v): ("pinned", None) for v in mesh.boundary_vertices()}
    return ConstraintSet(kinds, _build_basis(len(mesh.vertices), kinds), "dirichlet")


# ---------------------------------------------------------------------------
# Rotational-symmetry detection.
# ---------------------------------------------------------------------------

@dataclass
class LOmegaInfo:
    kind: str                      # "trivial" | "rotational"
    residual: float                # normalized boundary misfit
    center: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "residual": self.residual,
            "center": None if self.center is None else self.center.tolist(),
        }


def detect_L_omega(mesh: TriMesh, tol: float = ROTATION_TOL) -> LOmegaInfo:
    """Least-squares fit of a rotation center to the boundary.

    The affine field x -> (x - c)^perp is tangential iff (x - c)^perp . n
    vanishes on the boundary; the misfit is minimized over c at edge
    midpoints with edge-length weights and normalized by the weighted spread
    of the boundary around the fitted center.
    """
    mids = 0.5 * (mesh.vertices[mesh.boundary_edges[:, 0]] + mesh.vertices[mesh.boundary_edges[:, 1]])
    n = mesh.boundary_normals
    w = mesh.edge_lengths()
    # (x - c)^perp . n = x^perp . n - c . m  with  m = (n2, -n1).
    m = np.stack([n[:, 1], -n[:, 0]], axis=1)
    target = mids[:, 0] * n[:, 1] - mids[:, 1] * n[:, 0]  # x^perp . n
    M = (w[:, None, None] * np.einsum("ei,ej->eij", m, m)).sum(axis=0)
    rhs = (w[:, None] * target[:, None] * m).sum(axis=0)
    try:
        center = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        center = np.linalg.lstsq(M, rhs, rcond=None)[0]
    misfit = target - m @ center
    spread = np.einsum("e,e->", w, ((mids - center) ** 2).sum(axis=1))
    residual = math.sqrt(float(w @ misfit**2) / max(spread, 1e-300))
    if residual < tol:
        return LOmegaInfo("rotational", residual, center)
    return LOmegaInfo("trivial", residual)


# ---------------------------------------------------------------------------
# Eigen solve.
# ---------------------------------------------------------------------------

@dataclass
class KornEstimate:
    kappa_sq: float
    maximizer: np.ndarray          # full dof vector (2V), admissible
    eig_residual: float
    top_eigenspace_dim: int
    dof_count: int
    iterations: int
    l_omega: LOmegaInfo
    deflated_rotation: bool

    def to_dict(self, include_maximizer: bool = False) -> dict:
        out = {
            "kappa_sq": self.kappa_sq,
            "eig_residual": self.eig_residual,
            "top_eigenspace_dim": self.top_eigenspace_dim,
            "dof_count": self.dof_count,
            "iterations": self.iterations,
            "l_omega": self.l_omega.to_dict(),
            "deflated_rotation": self.deflated_rotation,
        }
        if include_maximizer:
            out["maximizer"] = self.maximizer.tolist()
        return out


class _Pencil:
    """Constrained pencil (A~, B) with optional rank-one curl downdate and
    a deflated rigid-rotation direction removed from the trial space."""

    def __init__(self, forms: AssembledForms, constraints: ConstraintSet,
                 rank_one: np.ndarray | None, deflate: list[np.ndarray]):
        Z = constraints.basis
        self.A = (Z.T @ forms.grad @ Z).tocsr()
        self.B = (Z.T @ forms.symgrad @ Z).tocsr()
        self.ell = None if rank_one is None else Z.T @ rank_one
        self.scale = 2.0 * forms.area
        self.deflate = deflate  # orthonormal directions excluded from trials
        self.n = Z.shape[1]
        self._solve = None

    def project(self, x: np.ndarray) -> np.ndarray:
        for q in self.deflate:
            x = x - q * (q @ x)
        return x

    def apply_A(self, x: np.ndarray) -> np.ndarray:
        y = self.A @ x
        if self.ell is not None:
            y = y - self.ell * ((self.ell @ x) / self.scale)
        return y

    def quad_A(self, x: np.ndarray) -> float:
        val = float(x @ (self.A @ x))
        if self.ell is not None:
            val -= float(self.ell @ x) ** 2 / self.scale
        return val

    def apply_B(self, x: np.ndarray) -> np.ndarray:
        return self.B @ x

    def solve_B(self, rhs: np.ndarray) -> np.ndarray:
        """Solve B y = rhs on the deflated subspace.

        Without deflation this is a direct sparse solve.  With a deflated
        kernel direction q the sparse saddle system [[B, q], [q^T, 0]] pins
        q^T y = 0 while solving B y = rhs modulo span{q}, which is the
        correct restricted inverse (B is singular along q).
        """
        if self._solve is None:
            try:
                if self.deflate:
                    q = self.deflate[0][:, None]
                    aug = sp.bmat([[self.B, q], [q.T, None]], format="csc")
                    lu = spla.splu(aug)
                    pad = len(self.deflate)

                    def solve(r, lu=lu, pad=pad):
                        y = lu.solve(np.concatenate([r, np.zeros(pad)]))
                        return y[:-pad]

                else:
                    lu = spla.splu(self.B.tocsc())
                    solve = lu.solve
            except Exception as exc:
                raise SolverFailure(
                    "factorization of the symmetric-gradient form failed "
                    f"(undetected rigid mode or broken mesh): {exc}"
                ) from exc
            self._solve = solve
        y = self._solve(rhs)
        if not np.all(np.isfinite(y)):
            raise SolverFailure(
                "singular symmetric-gradient form after deflation: "
                "geometry/symmetry mismatch"
            )
        return y

    def b_norm(self, x: np.ndarray) -> float:
        return math.sqrt(max(float(x @ (self.B @ x)), 0.0))


def _block_top(pencil: _Pencil, seeds: np.ndarray, tol: float, max_iter: int
               ) -> tuple[np.ndarray, np.ndarray, int]:
    """Locally optimal block iteration for the largest eigenpairs of (A~, B).

    Each step maximizes the Rayleigh quotient over the span of the current
    block X, the preconditioned residuals B^{-1}(A X - B X diag(rho)), and
    the previous update directions P.  The span contains the previous block,
    so the leading Rayleigh quotient is nondecreasing: every reported value
    is the quotient of an explicit admissible field, hence a certified lower
    bound.  The block (seeded with random companions) makes locking onto an
    interior eigenvalue from a near-eigenvector start vanishingly unlikely,
    where single-vector power iteration with a stagnation stop can be fooled.

    Returns (values, vectors, iterations); values sorted descending and
    vectors B-orthonormal.
    """
    X = np.stack([pencil.project(s) for s in seeds], axis=1)
    X = _b_orthonormalize(pencil, X)
    if X.shape[1] == 0:
        raise SolverFailure("start block is B-degenerate after deflation")
    P = None
    rho_top = -np.inf
    stall = 0
    iterations = 0
    for it in range(max_iter):
        iterations = it + 1
        AX = np.stack([pencil.apply_A(X[:, j]) for j in range(X.shape[1])], axis=1)
        BX = np.stack([pencil.apply_B(X[:, j]) for j in range(X.shape[1])], axis=1)
        rhos = np.einsum("ij,ij->j", X, AX)
        R = AX - BX * rhos[None, :]
        W = np.stack(
            [pencil.project(pencil.solve_B(pencil.project(R[:, j]))) for j in range(R.shape[1])],
            axis=1,
        )
        blocks = [X, W] if P is None else [X, W, P]
        S = _b_orthonormalize(pencil, np.concatenate(blocks, axis=1))
        AS = np.stack([pencil.apply_A(S[:, j]) for j in range(S.shape[1])], axis=1)
        a_small = S.T @ AS
        a_small = 0.5 * (a_small + a_small.T)
        vals, vecs = np.linalg.eigh(a_small)
        take = min(X.shape[1], S.shape[1])
        coeff = vecs[:, ::-1][:, :take]
        X_new = S @ coeff
        P = X_new - X @ (X.T @ np.stack(
            [pencil.apply_B(X_new[:, j]) for j in range(take)], axis=1))
        X = _b_orthonormalize(pencil, X_new)
        top = float(vals[-1])
        if abs(top - rho_top) < tol * max(1.0, abs(top)):
            stall += 1
            if stall >= 2:
                rho_top = top
                break
        else:
            stall = 0
        rho_top = top
    AX = np.stack([pencil.apply_A(X[:, j]) for j in range(X.shape[1])], axis=1)
    rhos = np.einsum("ij,ij->j", X, AX)
    order = np.argsort(rhos)[::-1]
    return rhos[order], X[:, order], iterations


def _b_orthonormalize(pencil: _Pencil, V: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt in the B inner product, dropping the span's
    numerically degenerate directions."""
    cols = []
    for j in range(V.shape[1]):
        v = V[:, j]
        for u in cols:
            v = v - u * float(u @ pencil.apply_B(v))
        nv = pencil.b_norm(v)
        if nv > 1e-10:
            cols.append(v / nv)
    if not cols:
        return np.zeros((V.shape[0], 0))
    return np.stack(cols, axis=1)


def _dense_top(pencil: _Pencil, count: int):
    from scipy.linalg import null_space

    A = pencil.A.toarray()
    if pencil.ell is not None:
        A = A - np.outer(pencil.ell, pencil.ell) / pencil.scale
    B = pencil.B.toarray()
    if pencil.deflate:
        Q = np.stack(pencil.deflate, axis=1)
        basis = null_space(Q.T)
        A = basis.T @ A @ basis
        B = basis.T @ B @ basis
        vals, vecs = eigh(A, B)
        vecs = basis @ vecs
    else:
        vals, vecs = eigh(A, B)
    order = np.argsort(vals)[::-1]
    return vals[order[:count]], vecs[:, order[:count]]


def _rotation_dofs(mesh: TriMesh, constraints: ConstraintSet, center: np.ndarray) -> np.ndarray | None:
    """Constrained coordinates of the rigid rotation about ``center`` when it
    is admissible; None when a pinned vertex obstructs it."""
    field = np.zeros(2 * len(mesh.vertices))
    rel = mesh.vertices - center[None, :]
    field[0::2] = -rel[:, 1]
    field[1::2] = rel[:, 0]
    coords = constraints.basis.T @ field
    back = constraints.basis @ coords
    if np.linalg.norm(back - field) > 1e-10 * max(1.0, np.linalg.norm(field)):
        return None
    return coords


def korn_constant(
    mesh: TriMesh,
    bc: str = "tangential",
    tol: float = 1e-10,
    max_iter: int = 400,
    seed_coords: np.ndarray | None = None,
    extra_pairs: int = 2,
    dense_threshold: int = 200,
) -> KornEstimate:
    """Maximize the Korn Rayleigh quotient on the constrained P1 space.

    ``seed_coords`` (constrained coordinates) start the iteration; default is
    the interpolated divergence-free bump, which already carries a quotient
    close to the supremum.  ``extra_pairs`` deflated eigenpairs are computed
    to report the dimension of the top eigenvalue cluster.
    """
    if bc not in ("tangential", "dirichlet"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    forms = assemble(mesh)
    constraints = (
        tangential_constraints(mesh) if bc == "tangential" else dirichlet_constraints(mesh)
    )
    if constraints.dof_count == 0:
        raise SolverFailure("constrained space is empty; refine the mesh")

    l_omega = detect_L_omega(mesh)
    deflate: list[np.ndarray] = []
    rank_one = None
    deflated_rotation = False
    if bc == "tangential" and l_omega.kind == "rotational":
        rank_one = forms.curl_vec
        rot = _rotation_dofs(mesh, constraints, l_omega.center)
        if rot is not None:
            deflate.append(rot / np.linalg.norm(rot))
            deflated_rotation = True

    pencil = _Pencil(forms, constraints, rank_one, deflate)

    if seed_coords is None:
        seed_coords = _bump_seed(mesh, constraints)
    seed_coords = pencil.project(seed_coords)
    if float(seed_coords @ (pencil.B @ seed_coords)) <= 0.0:
        rng = np.random.default_rng(0)
        seed_coords = pencil.project(rng.standard_normal(pencil.n))

    if pencil.n <= dense_threshold:
        count = min(1 + extra_pairs, pencil.n - len(deflate))
        vals, vecs = _dense_top(pencil, count)
        top = float(vals[0])
        vec = vecs[:, 0]
        iterations = 0
        extra = [float(v) for v in vals[1:]]
    else:
        rng = np.random.default_rng(0)
        block = min(1 + extra_pairs, pencil.n - len(deflate))
        seeds = [seed_coords] + [rng.standard_normal(pencil.n) for _ in range(block - 1)]
        vals, vecs, iterations = _block_top(pencil, seeds, tol, max_iter)
        top = float(vals[0])
        vec = vecs[:, 0]
        extra = [float(v) for v in vals[1:]]

    cluster = [top] + [v for v in extra]
    dim = sum(1 for v in cluster if abs(top - v) <= CLUSTER_WIDTH * max(1.0, abs(top)))

    Ax = pencil.apply_A(vec)
    Bx = pencil.apply_B(vec)
    resid = np.linalg.norm(Ax - top * Bx) / max(np.linalg.norm(Ax), 1e-300)
    maximizer = constraints.basis @ vec

    return KornEstimate(
        kappa_sq=float(top),
        maximizer=maximizer,
        eig_residual=float(resid),
        top_eigenspace_dim=int(dim),
        dof_count=pencil.n,
        iterations=iterations,
        l_omega=l_omega,
        deflated_rotation=deflated_rotation,
    )


def _bump_seed(mesh: TriMesh, constraints: ConstraintSet) -> np.ndarray:
    """Divergence-free bump interpolant: u = rot(psi) for a quartic bump psi
    scaled to the mesh bounding box, evaluated at the vertices."""
    v = mesh.vertices
    lo = v.min(axis=0)
    hi = v.max(axis=0)
    span = np.where(hi - lo <= 0.0, 1.0, hi - lo)
    s = (v - lo) / span  # unit-box coordinates
    # psi = (s1 (1-s1) s2 (1-s2))^2; u = (d psi / d s2, -d psi / d s1).
    a = s[:, 0] * (1.0 - s[:, 0])
    b = s[:, 1] * (1.0 - s[:, 1])
    da = 1.0 - 2.0 * s[:, 0]
    db = 1.0 - 2.0 * s[:, 1]
    u1 = 2.0 * a**2 * b * db / span[1]
    u2 = -2.0 * a * da * b**2 / span[0]
    field = np.zeros(2 * len(v))
    field[0::2] = u1
    field[1::2] = u2
    return constraints.basis.T @ field


# ---------------------------------------------------------------------------
# Quadrature evaluation of analytic fields.
# ---------------------------------------------------------------------------

def evaluate_field_ratio(mesh: TriMesh, u_fn, grad_fn) -> dict:
    """Quadrature norms of an analytic field over the mesh.

    ``u_fn`` maps (N, 2) points to (N, 2) values; ``grad_fn`` to (N, 2, 2)
    gradients.  Uses the three-midpoint rule (exact for quadratics).  Returns
    grad_norm, symgrad_norm, korn_quotient and the tangency residual
    max |u . n| over boundary-edge midpoints.  Raises
    :class:`InfiniteQuotient` when the symmetric gradient vanishes.
    """
    v = mesh.vertices
    t = mesh.triangles
    areas = np.abs(mesh.areas())
    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    mids = np.stack([0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)])  # (3, T, 2)
    w = np.repeat(areas[None, :] / 3.0, 3, axis=0).ravel()
    pts = mids.reshape(-1, 2)
    G = np.asarray(grad_fn(pts), dtype=float)
    grad_sq = float(np.einsum("q,qij->", w, G**2))
    D = 0.5 * (G + np.swapaxes(G, 1, 2))
    sym_sq = float(np.einsum("q,qij->", w, D**2))

    bmids = 0.5 * (v[mesh.boundary_edges[:, 0]] + v[mesh.boundary_edges[:, 1]])
    ub = np.asarray(u_fn(bmids), dtype=float)
    tangency = float(np.abs(np.einsum("ei,ei->e", ub, mesh.boundary_normals)).max())

    grad_norm = math.sqrt(grad_sq)
    sym_norm = math.sqrt(sym_sq)
    if sym_norm <= 1e-12 * max(grad_norm, 1e-300):
        raise InfiniteQuotient(
            "symmetric gradient vanishes (rigid motion); the quotient is infinite"
        )
    return {
        "grad_norm": grad_norm,
        "symgrad_norm": sym_norm,
        "korn_quotient": grad_norm / sym_norm,
        "tangency_residual": tangency,
    }


# ---------------------------------------------------------------------------
# Built-in domains and refinement sweeps.
# ---------------------------------------------------------------------------

def builtin_domain(name: str, level: int = 0, **params) -> TriMesh:
    """Mesh generators for the stock domains, parameterized by a level.

    square: 2^level cells per side (level 0 is the two-triangle mesh);
            nested under level increments.
    disk:   hex fan subdivided ``level`` times (needs level >= 2 for slip
            conditions: coarser polygons have only corner vertices).
    annulus: structured band, 16*2^level angular by 2+level radial.
    shell:  thin shell around the unit circle; params profile (callable or
            None for the stock profile) and thickness h.
    """
    if name == "square":
        return unit_square(2**level)
    if name == "disk":
        return disk(level, center=params.get("center", (0.0, 0.0)),
                    radius=params.get("radius", 1.0))
    if name == "annulus":
        return annulus(
            params.get("r_inner", 0.5),
            params.get("r_outer", 1.0),
            angular=16 * 2**level,
            radial=2 + level,
        )
    if name == "shell":
        from .shells import ShellSpec, shell_mesh

        spec = params.get("spec") or ShellSpec(
            h=params.get("h", 0.1),
            angular_resolution=64 * 2**level,
            radial_layers=2 + level,
        )
        return shell_mesh(spec)
    raise MeshValidationError(f"unknown builtin domain {name!r}")


def square_prolongation(coarse: np.ndarray, cells: int) -> np.ndarray:
    """Prolong a full dof vector from the m-cell structured square mesh to
    the 2m-cell one (vertex injection plus edge/face midpoint averages)."""
    m = cells
    old = coarse.reshape(m + 1, m + 1, 2)
    new = np.zeros((2 * m + 1, 2 * m + 1, 2))
    new[0::2, 0::2] = old
    new[1::2, 0::2] = 0.5 * (old[:-1, :] + old[1:, :])
    new[0::2, 1::2] = 0.5 * (old[:, :-1] + old[:, 1:])
    # Cell centers sit on the coarse diagonal edge v(i,j)-v(i+1,j+1): the P1
    # interpolant there averages the two diagonal endpoints only.
    new[1::2, 1::2] = 0.5 * (old[:-1, :-1] + old[1:, 1:])
    return new.reshape(-1)


def korn_sweep(domain: str, levels: list[int], bc: str = "tangential",
               tol: float = 1e-10, **params) -> list[KornEstimate]:
    """Refinement sweep; on the square the previous maximizer is prolonged
    into the next level's start vector, which makes the reported sequence
    nondecreasing by construction (nested spaces, monotone iteration)."""
    estimates: list[KornEstimate] = []
    prev: KornEstimate | None = None
    for level in levels:
        mesh = builtin_domain(domain, level=level, **params)
        seed = None
        if domain == "square" and prev is not None:
            cells_prev = 2 ** (level - 1)
            full = square_prolongation(prev.maximizer, cells_prev)
            constraints = (
                tangential_constraints(mesh) if bc == "tangential" else dirichlet_constraints(mesh)
            )
            seed = constraints.basis.T @ full
        est = korn_constant(mesh, bc=bc, tol=tol, seed_coords=seed)
        estimates.append(est)
        prev = est
    return estimates
