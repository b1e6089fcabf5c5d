import numpy as np
import pytest

from kornlab.errors import MeshValidationError
from kornlab.mesh import TriMesh, annulus, disk, load_mesh, save_mesh, unit_square


class TestSquare:
    def test_level_zero_counts(self):
        m = unit_square(1)
        m.validate()
        assert len(m.triangles) == 2
        assert len(m.boundary_edges) == 4
        assert len(m.boundary_loops()) == 1

    def test_refined_counts_and_area(self):
        m = unit_square(4)
        m.validate()
        assert len(m.triangles) == 32
        assert m.areas().sum() == pytest.approx(1.0, abs=1e-15)


class TestDisk:
    def test_boundary_on_circle_and_radial_normals(self):
        center = np.array([3.0, -1.0])
        m = disk(3, center=(3.0, -1.0))
        m.validate()
        bv = m.boundary_vertices()
        radii = np.linalg.norm(m.vertices[bv] - center, axis=1)
        assert np.abs(radii - 1.0).max() < 1e-12
        mids = 0.5 * (m.vertices[m.boundary_edges[:, 0]] + m.vertices[m.boundary_edges[:, 1]])
        radial = mids - center
        radial /= np.linalg.norm(radial, axis=1, keepdims=True)
        assert np.abs(m.boundary_normals - radial).max() < 1e-12

    def test_area_converges_to_circle(self):
        areas = [disk(level).areas().sum() for level in (1, 2, 3, 4)]
        errors = [abs(a - np.pi) for a in areas]
        assert errors[-1] < errors[0] / 10


class TestAnnulus:
    def test_two_loops_opposite_orientation(self):
        m = annulus(0.5, 1.0, angular=48, radial=3)
        m.validate()
        loops = m.boundary_loops()
        assert len(loops) == 2
        signs = []
        for loop in loops:
            pts = m.vertices[loop]
            signs.append(
                np.sign(
                    0.5
                    * np.sum(
                        pts[:, 0] * np.roll(pts[:, 1], -1)
                        - pts[:, 1] * np.roll(pts[:, 0], -1)
                    )
                )
            )
        assert sorted(signs) == [-1.0, 1.0]

    def test_rejects_inverted_radii(self):
        with pytest.raises(MeshValidationError):
            annulus(1.0, 0.5)


class TestValidation:
    def test_degenerate_triangle(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        mesh = TriMesh.__new__(TriMesh)
        mesh.vertices = verts
        mesh.triangles = np.array([[0, 1, 2]])
        with pytest.raises(MeshValidationError, match="area"):
            mesh.validate()

    def test_nonconforming_edge(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 1.0]])
        tris = np.array([[0, 1, 2], [0, 1, 3], [0, 1, 4]])
        mesh = unit_square(1)
        mesh.vertices = verts
        mesh.triangles = tris
        with pytest.raises(MeshValidationError, match="conforming|two triangles"):
            mesh.validate()

    def test_index_out_of_range(self):
        mesh = unit_square(1)
        mesh.triangles = np.array([[0, 1, 9]])
        with pytest.raises(MeshValidationError, match="range"):
            mesh.validate()


class TestMeshIO:
    def test_roundtrip(self, tmp_path):
        m = annulus(0.7, 1.0, angular=24, radial=2)
        path = tmp_path / "mesh.json"
        save_mesh(m, path)
        back = load_mesh(path)
        np.testing.assert_allclose(back.vertices, m.vertices)
        np.testing.assert_array_equal(back.triangles, m.triangles)
        np.testing.assert_allclose(back.boundary_normals, m.boundary_normals)

    def test_rejects_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(MeshValidationError, match="JSON"):
            load_mesh(path)

    def test_rejects_missing_keys(self, tmp_path):
        path = tmp_path / "partial.json"
        path.write_text('{"vertices": [[0,0],[1,0],[0,1]]}')
        with pytest.raises(MeshValidationError, match="triangles"):
            load_mesh(path)

    def test_rejects_degenerate_content(self, tmp_path):
        path = tmp_path / "degen.json"
        path.write_text(
            '{"vertices": [[0,0],[1,0],[2,0]], "triangles": [[0,1,2]]}'
        )
        with pytest.raises(MeshValidationError, match="area"):
            load_mesh(path)
