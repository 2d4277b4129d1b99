import logging
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aesfem.mesh import generate_box_mesh, generate_disc_mesh
from aesfem.mesh.neighborhoods import (
    RingSpec,
    StencilError,
    monomial_count,
    ring_neighborhood,
    select_stencil,
    start_ring,
)

SQUARE = generate_box_mesh(2, 8)
CUBE = generate_box_mesh(3, 4, perturb=0.2, seed=5)
DISC = generate_disc_mesh(6)


def node_at(mesh, point):
    return int(np.argmin(np.linalg.norm(mesh.coords - np.asarray(point), axis=1)))


def ring_sequence(dim, up_to):
    r = RingSpec(1)
    out = [r]
    while r.value < up_to:
        r = r.next(dim)
        out.append(r)
    return out


class TestRings:
    def test_interior_one_ring(self):
        nodes = ring_neighborhood(SQUARE, SQUARE.half_facets, node_at(SQUARE, (0.5, 0.5)), RingSpec(1))
        assert len(nodes) == 7

    def test_corner_one_ring(self):
        nodes = ring_neighborhood(SQUARE, SQUARE.half_facets, node_at(SQUARE, (0, 0)), RingSpec(1))
        assert len(nodes) == 4

    def test_canonical_order(self):
        c = node_at(SQUARE, (0.5, 0.25))
        nodes = ring_neighborhood(SQUARE, SQUARE.half_facets, c, RingSpec(2, Fraction(1, 2)))
        assert nodes[0] == c
        assert np.all(np.diff(nodes[1:]) > 0)

    def test_1d_rings(self):
        line = generate_box_mesh(1, 10)
        c = node_at(line, (0.5,))
        assert len(ring_neighborhood(line, line.half_facets, c, RingSpec(3))) == 7

    @pytest.mark.parametrize("dim,frac", [(1, Fraction(1, 2)), (2, Fraction(1, 3)), (3, Fraction(1, 2))])
    def test_illegal_fraction(self, dim, frac):
        mesh = generate_box_mesh(dim, 3)
        with pytest.raises(ValueError):
            ring_neighborhood(mesh, mesh.half_facets, 0, RingSpec(1, frac))

    def test_next_sequence(self):
        assert [str(r) for r in ring_sequence(3, 3)] == ["1", "1+1/3", "1+2/3", "2", "2+1/3", "2+2/3", "3"]
        assert [str(r) for r in ring_sequence(2, 3)] == ["1", "1+1/2", "2", "2+1/2", "3"]

    @pytest.mark.parametrize("mesh", [SQUARE, CUBE, DISC], ids=["square", "cube", "disc"])
    @given(data=st.data())
    def test_monotone(self, mesh, data):
        node = data.draw(st.integers(0, mesh.node_count - 1))
        prev = set()
        for ring in ring_sequence(mesh.dim, 3):
            cur = set(ring_neighborhood(mesh, mesh.half_facets, node, ring).tolist())
            assert prev <= cur
            prev = cur


class TestStencil:
    def test_start_rings(self):
        table2 = {2: "1+1/2", 3: "2", 4: "2+1/2", 5: "3", 6: "3+1/2"}
        table3 = {2: "1", 3: "1+1/3", 4: "1+2/3", 5: "2", 6: "2+1/3"}
        assert {d: str(start_ring(2, d)) for d in table2} == table2
        assert {d: str(start_ring(3, d)) for d in table3} == table3

    def test_monomial_counts(self):
        assert monomial_count(2, 2) == 6
        assert monomial_count(3, 6) == 84
        assert [monomial_count(1, d) for d in range(1, 7)] == [2, 3, 4, 5, 6, 7]

    def test_2d_degree2_target(self):
        st_ = select_stencil(SQUARE, SQUARE.half_facets, node_at(SQUARE, (0.5, 0.5)), 2)
        assert st_.m >= 9

    def test_3d_degree6_target(self):
        cube = generate_box_mesh(3, 8)
        st_ = select_stencil(cube, cube.half_facets, node_at(cube, (0.5, 0.5, 0.5)), 6)
        assert st_.m >= 1.5 * 84

    def test_minimal_1d(self, caplog):
        line = generate_box_mesh(1, 2)
        with caplog.at_level(logging.WARNING, logger="aesfem.mesh.neighborhoods"):
            st_ = select_stencil(line, line.half_facets, node_at(line, (0.5,)), 2)
        assert st_.m == 3
        assert "below the target" in caplog.text

    def test_too_small(self):
        line = generate_box_mesh(1, 2)
        with pytest.raises(StencilError):
            select_stencil(line, line.half_facets, 0, 4)

    def test_characteristic_length(self):
        st_ = select_stencil(SQUARE, SQUARE.half_facets, node_at(SQUARE, (0.5, 0.5)), 2)
        # four axis neighbours at h and two diagonal ones at h*sqrt(2)
        assert st_.h == pytest.approx((4 + 2 * np.sqrt(2)) / 6 / 8)

    @pytest.mark.parametrize("mesh", [SQUARE, CUBE, DISC, generate_box_mesh(1, 12)], ids=["square", "cube", "disc", "line"])
    @given(data=st.data())
    def test_size_invariant(self, mesh, data):
        node = data.draw(st.integers(0, mesh.node_count - 1))
        degree = data.draw(st.integers(1, 6 if mesh.dim < 3 else 3))
        ratio = data.draw(st.floats(1.0, 2.0))
        n = monomial_count(mesh.dim, degree)
        try:
            s = select_stencil(mesh, mesh.half_facets, node, degree, ratio)
        except StencilError:
            assert mesh.node_count < n
            return
        assert s.m >= n
        assert s.m >= min(ratio * n, mesh.node_count)
        assert s.nodes[0] == node and len(set(s.nodes.tolist())) == s.m
