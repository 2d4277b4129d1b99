import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aesfem.mesh import (
    Mesh,
    MeshError,
    MeshFormatError,
    distort_mesh,
    generate_box_mesh,
    generate_disc_mesh,
    load_mesh,
    mesh_quality,
    save_mesh,
)

TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def check_half_facets(mesh):
    hf = mesh.half_facets
    nf = mesh.dim + 1
    for e in range(mesh.elem_count):
        for f in range(nf):
            sib = hf.sibling_of(e, f)
            if sib is None:
                continue
            e2, f2 = sib
            assert hf.sibling_of(e2, f2) == (e, f)
            a = set(np.delete(mesh.elems[e], f).tolist())
            b = set(np.delete(mesh.elems[e2], f2).tolist())
            assert a == b
    # boundary nodes are exactly the nodes on NULL-sibling facets
    on_bnd = np.zeros(mesh.node_count, bool)
    for e, f in hf.boundary_half_facets():
        on_bnd[np.delete(mesh.elems[e], f)] = True
    np.testing.assert_array_equal(on_bnd, mesh.boundary)
    for v in range(mesh.node_count):
        e, f = hf.decode(int(hf.v2hf[v]))
        assert v in np.delete(mesh.elems[e], f)


class TestConstruction:
    def test_single_triangle_all_boundary(self):
        m = Mesh.from_arrays(TRIANGLE, [[0, 1, 2]])
        assert m.node_count == 3 and m.elem_count == 1
        assert m.boundary.all()
        assert len(m.half_facets.boundary_half_facets()) == 3

    def test_two_triangles_one_pair(self):
        coords = np.vstack([TRIANGLE, [[1.0, 1.0]]])
        m = Mesh.from_arrays(coords, [[0, 1, 2], [1, 3, 2]])
        hf = m.half_facets
        assert len(hf.boundary_half_facets()) == 4
        assert np.count_nonzero(hf.sibling >= 0) == 2

    def test_orientation_is_normalized(self):
        m = Mesh.from_arrays(TRIANGLE, [[0, 2, 1]])
        assert m.volumes()[0] > 0

    def test_missing_node(self):
        with pytest.raises(MeshError, match="missing node"):
            Mesh.from_arrays(TRIANGLE, [[0, 1, 5]])

    def test_repeated_node(self):
        with pytest.raises(MeshError, match="repeated"):
            Mesh.from_arrays(TRIANGLE, [[0, 1, 1]])

    def test_degenerate(self):
        with pytest.raises(MeshError, match="degenerate"):
            Mesh.from_arrays([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])

    def test_non_manifold_reports_nodes(self):
        coords = [[0, 0], [1, 0], [0.5, 1], [0.5, -1], [0.5, 2]]
        with pytest.raises(MeshError, match=r"\[0, 1\]"):
            Mesh.from_arrays(coords, [[0, 1, 2], [1, 0, 3], [0, 1, 4]])

    def test_arrays_are_read_only(self, square8):
        with pytest.raises(ValueError):
            square8.coords[0, 0] = 5.0


class TestGenerators:
    def test_square_counts(self):
        m = generate_box_mesh(2, 2)
        assert (m.node_count, m.elem_count, len(m.boundary_nodes)) == (9, 8, 8)

    def test_interval_nodes(self):
        m = generate_box_mesh(1, 4)
        np.testing.assert_allclose(np.sort(m.coords[:, 0]), [0, 0.25, 0.5, 0.75, 1])

    def test_cube_counts_and_volume(self):
        m = generate_box_mesh(3, 2)
        assert (m.node_count, m.elem_count) == (27, 48)
        assert math.isclose(m.volumes().sum(), 1.0, rel_tol=1e-14)

    def test_square_perimeter_half_facets(self):
        assert len(generate_box_mesh(2, 4).half_facets.boundary_half_facets()) == 16

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_perturbation_moves_only_interior(self, dim):
        a = generate_box_mesh(dim, 4)
        b = generate_box_mesh(dim, 4, perturb=0.3, seed=7)
        np.testing.assert_array_equal(a.coords[a.boundary], b.coords[b.boundary])
        shift = np.abs(a.coords - b.coords).max()
        assert 0 < shift <= 0.3 / 4 + 1e-15
        assert (b.volumes() > 0).all()

    def test_perturbation_is_seeded(self):
        a = generate_box_mesh(2, 5, perturb=0.2, seed=3)
        b = generate_box_mesh(2, 5, perturb=0.2, seed=3)
        np.testing.assert_array_equal(a.coords, b.coords)

    def test_disc_fan(self):
        m = generate_disc_mesh(1)
        assert (m.node_count, m.elem_count) == (7, 6)

    def test_disc_two_rings(self):
        m = generate_disc_mesh(2)
        assert (m.node_count, m.elem_count) == (19, 24)
        r2 = (m.coords[m.boundary] ** 2).sum(axis=1)
        assert m.boundary.sum() == 12
        np.testing.assert_allclose(r2, 1.0, atol=1e-15)

    def test_disc_area(self):
        m = generate_disc_mesh(64)
        assert abs(m.volumes().sum() - math.pi) / math.pi < 1e-3
        assert (m.volumes() > 0).all()

    @pytest.mark.parametrize("dim,div", [(1, 5), (2, 4), (3, 3)])
    def test_half_facet_invariants(self, dim, div):
        check_half_facets(generate_box_mesh(dim, div, perturb=0.2, seed=1))

    def test_disc_half_facet_invariants(self):
        check_half_facets(generate_disc_mesh(4))


class TestQuality:
    def test_equilateral(self):
        m = Mesh.from_arrays([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]], [[0, 1, 2]])
        np.testing.assert_allclose(mesh_quality(m), (60, 60))

    def test_right_isosceles(self):
        np.testing.assert_allclose(mesh_quality(Mesh.from_arrays(TRIANGLE, [[0, 1, 2]])), (45, 90))

    def test_regular_tetrahedron(self):
        pts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)
        lo, hi = mesh_quality(Mesh.from_arrays(pts, [[0, 1, 2, 3]]))
        ref = math.degrees(math.acos(1 / 3))
        assert math.isclose(lo, ref, rel_tol=1e-12) and math.isclose(hi, ref, rel_tol=1e-12)


class TestDistortion:
    def test_identity(self, square8):
        assert distort_mesh(square8, [3, 10], 1.0) is square8

    @pytest.mark.parametrize("vertex", ["lowest", "deepest"])
    def test_half_height_halves_area(self, square8, vertex):
        m = distort_mesh(square8, [40], 0.5, vertex=vertex)
        assert math.isclose(m.volumes()[40], 0.5 * square8.volumes()[40], rel_tol=1e-12)
        assert mesh_quality(m)[0] < mesh_quality(square8)[0]

    def test_lowest_vertex_is_moved(self, square8):
        e = 40
        m = distort_mesh(square8, [e], 0.5)
        moved = np.nonzero(np.any(m.coords != square8.coords, axis=1))[0]
        assert moved.tolist() == [int(square8.elems[e].min())]

    def test_min_angle_monotone(self):
        base = generate_box_mesh(2, 8, perturb=0.2, seed=0)
        angles = [mesh_quality(distort_mesh(base, [30, 70], t, vertex="deepest"))[0] for t in (1, 1e-1, 1e-2, 1e-3)]
        assert all(a > b for a, b in zip(angles, angles[1:]))

    @given(st.floats(1e-6, 1.0))
    def test_volumes_stay_positive(self, t):
        base = generate_box_mesh(2, 8)
        m = distort_mesh(base, [20, 44, 90], t, vertex="deepest")
        assert (m.volumes() > 0).all()
        ratio = m.volumes()[[20, 44, 90]] / base.volumes()[[20, 44, 90]]
        np.testing.assert_allclose(ratio, t, rtol=1e-9)

    def test_inverting_move_is_reported(self):
        # neighbouring victims squash toward each other and fold a shared star
        base = generate_box_mesh(2, 6, perturb=0.1, seed=2)
        with pytest.raises(MeshError, match="inverted"):
            distort_mesh(base, [12, 30, 51], 0.0625, vertex="lowest")

    def test_unknown_vertex_rule(self, square8):
        with pytest.raises(ValueError):
            distort_mesh(square8, [0], 0.5, vertex="middle")

    def test_bad_t(self, square8):
        with pytest.raises(ValueError):
            distort_mesh(square8, [0], 0.0)


class TestIO:
    def test_native_round_trip(self, tmp_path):
        m = generate_box_mesh(2, 5, perturb=0.25, seed=4)
        save_mesh(m, tmp_path / "m.mesh")
        back = load_mesh(tmp_path / "m.mesh")
        np.testing.assert_array_equal(back.coords, m.coords)
        np.testing.assert_array_equal(back.elems, m.elems)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_node_ele_round_trip(self, tmp_path, dim):
        m = generate_box_mesh(dim, 3, perturb=0.1, seed=4)
        save_mesh(m, tmp_path / "m", format="node_ele")
        back = load_mesh(tmp_path / "m.node")
        np.testing.assert_allclose(back.coords, m.coords, rtol=0, atol=0)
        np.testing.assert_array_equal(back.elems, m.elems)

    def test_single_triangle_files(self, tmp_path):
        (tmp_path / "t.node").write_text("# tri\n3 2 0 0\n1 0 0\n2 1 0\n3 0 1\n")
        (tmp_path / "t.ele").write_text("1 3 0\n1 1 2 3\n")
        m = load_mesh(tmp_path / "t.node")
        assert (m.node_count, m.elem_count) == (3, 1)
        assert m.boundary.all()

    def test_extra_node_line_names_line(self, tmp_path):
        (tmp_path / "t.node").write_text("4 2 0 0\n1 0 0\n2 1 0\n3 0 1\n4 1 1\n5 2 2\n")
        (tmp_path / "t.ele").write_text("1 3 0\n1 1 2 3\n")
        with pytest.raises(MeshFormatError) as info:
            load_mesh(tmp_path / "t.node")
        assert info.value.line == 6
        assert "6" in str(info.value)

    def test_element_with_missing_node(self, tmp_path):
        (tmp_path / "t.node").write_text("3 2 0 0\n1 0 0\n2 1 0\n3 0 1\n")
        (tmp_path / "t.ele").write_text("1 3 0\n1 1 2 9\n")
        with pytest.raises(MeshError):
            load_mesh(tmp_path / "t.node")

    def test_bad_number(self, tmp_path):
        (tmp_path / "bad.mesh").write_text("2 3 1\n0 0\n1 x\n0 1\n0 1 2\n")
        with pytest.raises(MeshFormatError) as info:
            load_mesh(tmp_path / "bad.mesh")
        assert info.value.line == 3
