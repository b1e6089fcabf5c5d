"""Conforming 2D triangle meshes with oriented boundary data.

Triangles are stored counterclockwise; the boundary consists of the edges
owned by exactly one triangle, traversed with the interior on the left, so
the outward normal of a directed boundary edge (a, b) is the right-hand
rotation of b - a.  This orients inner loops of multiply connected domains
(annuli, shells) correctly without any convexity assumption.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MeshValidationError


@dataclass
class TriMesh:
    vertices: np.ndarray          # (V, 2) float
    triangles: np.ndarray         # (T, 3) int, counterclockwise
    region_label: str = "custom"
    # Populated by __post_init__:
    boundary_edges: np.ndarray = field(init=False)    # (E, 2) directed vertex pairs
    boundary_normals: np.ndarray = field(init=False)  # (E, 2) outward unit normals

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self._orient_ccw()
        self.boundary_edges, self.boundary_normals = self._boundary()

    # -- construction helpers ------------------------------------------------

    def _orient_ccw(self):
        v = self.vertices
        t = self.triangles
        p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        twice_area = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (
            p1[:, 1] - p0[:, 1]
        ) * (p2[:, 0] - p0[:, 0])
        flip = twice_area < 0.0
        if np.any(flip):
            self.triangles[flip, 1], self.triangles[flip, 2] = (
                self.triangles[flip, 2].copy(),
                self.triangles[flip, 1].copy(),
            )

    def _boundary(self):
        t = self.triangles
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        key = directed.min(axis=1).astype(np.int64) * (self.vertices.shape[0] + 1) + directed.max(axis=1)
        _, inverse, counts = np.unique(key, return_inverse=True, return_counts=True)
        boundary = directed[counts[inverse] == 1]
        d = self.vertices[boundary[:, 1]] - self.vertices[boundary[:, 0]]
        lengths = np.linalg.norm(d, axis=1)
        lengths = np.where(lengths == 0.0, 1.0, lengths)
        normals = np.stack([d[:, 1], -d[:, 0]], axis=1) / lengths[:, None]
        return boundary, normals

    # -- derived quantities ---------------------------------------------------

    def areas(self) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        return 0.5 * (
            (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
            - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
        )

    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    def boundary_loops(self) -> list[np.ndarray]:
        """Boundary decomposed into closed vertex loops (traversal order)."""
        nxt = {int(a): int(b) for a, b in self.boundary_edges}
        seen: set[int] = set()
        loops = []
        for start in sorted(nxt):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            cur = nxt[start]
            while cur != start:
                loop.append(cur)
                if cur in seen or cur not in nxt:
                    raise MeshValidationError("boundary edges do not form closed loops")
                seen.add(cur)
                cur = nxt[cur]
            loops.append(np.array(loop, dtype=np.int64))
        return loops

    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.boundary_edges[:, 1]] - self.vertices[self.boundary_edges[:, 0]]
        return np.linalg.norm(d, axis=1)

    # -- validation ------------------------------------------------------------

    def validate(self) -> None:
        """Raise MeshValidationError naming the first violated invariant."""
        v, t = self.vertices, self.triangles
        if v.ndim != 2 or v.shape[1] != 2:
            raise MeshValidationError("vertices must be an array of 2D points")
        if not np.all(np.isfinite(v)):
            raise MeshValidationError("vertex coordinates must be finite")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshValidationError("triangles must be index triples")
        if t.min(initial=0) < 0 or t.max(initial=-1) >= len(v):
            raise MeshValidationError("triangle indices out of vertex range")
        areas = self.areas()
        if np.any(areas <= 0.0):
            raise MeshValidationError("degenerate triangle with non-positive area")

        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        key = directed.min(axis=1).astype(np.int64) * (len(v) + 1) + directed.max(axis=1)
        _, counts = np.unique(key, return_counts=True)
        if np.any(counts > 2):
            raise MeshValidationError("non-conforming mesh: edge shared by more than two triangles")

        self.boundary_loops()  # raises when loops are not closed

        norms = np.linalg.norm(self.boundary_normals, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise MeshValidationError("boundary normals are not unit length")

        # Outward check: each boundary edge belongs to one triangle; the
        # normal must point away from that triangle's centroid.
        owner = self._boundary_edge_owners()
        centroids = v[t[owner]].mean(axis=1)
        mids = 0.5 * (v[self.boundary_edges[:, 0]] + v[self.boundary_edges[:, 1]])
        if np.any(np.einsum("ij,ij->i", self.boundary_normals, mids - centroids) <= 0.0):
            raise MeshValidationError("boundary normal points into the domain")

    def _boundary_edge_owners(self) -> np.ndarray:
        t = self.triangles
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        owners = np.tile(np.arange(len(t)), 3)
        lookup = {(int(a), int(b)): int(o) for (a, b), o in zip(directed, owners)}
        return np.array([lookup[(int(a), int(b))] for a, b in self.boundary_edges])


# ---------------------------------------------------------------------------
# Generators.
# ---------------------------------------------------------------------------

def unit_square(cells: int) -> TriMesh:
    """Structured unit-square mesh with ``cells`` x ``cells`` squares, split
    along the same diagonal so successive doublings are nested."""
    if cells < 1:
        raise MeshValidationError("square mesh needs at least one cell per side")
    m = cells
    xs = np.linspace(0.0, 1.0, m + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return i * (m + 1) + j

    tris = []
    for i in range(m):
        for j in range(m):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append([v00, v10, v11])
            tris.append([v00, v11, v01])
    return TriMesh(vertices, np.array(tris), region_label=f"square:{m}")


def disk(level: int, center: tuple[float, float] = (0.0, 0.0), radius: float = 1.0) -> TriMesh:
    """Polygonal disk: hexagonal fan subdivided ``level`` times, boundary
    midpoints projected back to the circle after each subdivision."""
    if level < 0:
        raise MeshValidationError("disk level must be nonnegative")
    angles = np.arange(6) * (math.pi / 3.0)
    vertices = np.concatenate(
        [np.zeros((1, 2)), np.stack([np.cos(angles), np.sin(angles)], axis=1)]
    )
    triangles = np.array([[0, 1 + i, 1 + (i + 1) % 6] for i in range(6)])
    for _ in range(level):
        vertices, triangles = _subdivide(vertices, triangles)
        r = np.linalg.norm(vertices, axis=1)
        mesh_tmp = TriMesh(vertices, triangles)
        on_boundary = np.zeros(len(vertices), dtype=bool)
        on_boundary[mesh_tmp.boundary_vertices()] = True
        scale = np.where(on_boundary & (r > 0.0), 1.0 / np.where(r == 0.0, 1.0, r), 1.0)
        vertices = vertices * scale[:, None]
    vertices = radius * vertices + np.asarray(center)[None, :]
    return TriMesh(vertices, triangles, region_label=f"disk:{level}")


def _subdivide(vertices: np.ndarray, triangles: np.ndarray):
    """Uniform 1-to-4 midpoint subdivision."""
    edge_ids: dict[tuple[int, int], int] = {}
    verts = [tuple(p) for p in vertices]

    def midpoint(a: int, b: int) -> int:
        key = (min(a, b), max(a, b))
        if key not in edge_ids:
            verts.append(tuple(0.5 * (vertices[a] + vertices[b])))
            edge_ids[key] = len(verts) - 1
        return edge_ids[key]

    new_tris = []
    for a, b, c in triangles:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        new_tris.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]])
    return np.array(verts), np.array(new_tris)


def annulus(
    r_inner: float,
    r_outer: float,
    angular: int = 64,
    radial: int = 4,
    center: tuple[float, float] = (0.0, 0.0),
) -> TriMesh:
    """Plain circular annulus (constant radii)."""
    return radial_band(
        lambda theta: np.full_like(theta, r_inner),
        lambda theta: np.full_like(theta, r_outer),
        angular=angular,
        radial=radial,
        center=center,
        label=f"annulus:{angular}x{radial}",
    )


def radial_band(
    inner_fn,
    outer_fn,
    angular: int = 64,
    radial: int = 4,
    center: tuple[float, float] = (0.0, 0.0),
    label: str = "band",
) -> TriMesh:
    """Structured mesh between two star-shaped radius profiles of theta."""
    if angular < 3 or radial < 1:
        raise MeshValidationError("band mesh needs angular >= 3 and radial >= 1")
    theta = 2.0 * math.pi * np.arange(angular) / angular
    r_in = np.asarray(inner_fn(theta), dtype=float)
    r_out = np.asarray(outer_fn(theta), dtype=float)
    if np.any(r_in <= 0.0) or np.any(r_out - r_in <= 0.0):
        raise MeshValidationError("band radii must satisfy 0 < inner < outer")
    verts = []
    for j in range(radial + 1):
        s = j / radial
        r = (1.0 - s) * r_in + s * r_out
        verts.append(np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1))
    vertices = np.concatenate(verts) + np.asarray(center)[None, :]

    def vid(i, j):
        return j * angular + (i % angular)

    tris = []
    for j in range(radial):
        for i in range(angular):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append([v00, v10, v11])
            tris.append([v00, v11, v01])
    return TriMesh(vertices, np.array(tris), region_label=label)


# ---------------------------------------------------------------------------
# JSON mesh files: {vertices, triangles, boundary}; normals are recomputed.
# ---------------------------------------------------------------------------

def save_mesh(mesh: TriMesh, path) -> None:
    payload = {
        "vertices": mesh.vertices.tolist(),
        "triangles": mesh.triangles.tolist(),
        "boundary": mesh.boundary_edges.tolist(),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n")


def load_mesh(path) -> TriMesh:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MeshValidationError(f"mesh file is not valid JSON: {exc}") from exc
    for key in ("vertices", "triangles"):
        if key not in payload:
            raise MeshValidationError(f"mesh file misses required key {key!r}")
    mesh = TriMesh(
        np.asarray(payload["vertices"], dtype=float),
        np.asarray(payload["triangles"], dtype=np.int64),
        region_label="file",
    )
    mesh.validate()
    return mesh
