"""Simplicial mesh container and array-based half-facet (AHF) adjacency.

A half-facet is one element's view of one of its facets.  Facet ``f`` of an
element is the facet opposite local vertex ``f``; half-facets are encoded as
``elem * (dim + 1) + f`` and ``-1`` marks a missing sibling (boundary).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    """Raised for structurally invalid meshes."""


def signed_volumes(coords: np.ndarray, elems: np.ndarray) -> np.ndarray:
    """Signed volume of every simplex (length in 1D, area in 2D)."""
    dim = coords.shape[1]
    x0 = coords[elems[:, 0]]
    edges = np.stack([coords[elems[:, k]] - x0 for k in range(1, dim + 1)], axis=1)
    return np.linalg.det(edges) / math.factorial(dim)


def barycentric_gradients(coords: np.ndarray, elems: np.ndarray) -> np.ndarray:
    """Constant gradients of the barycentric coordinates, shape (E, dim+1, dim).

    Row ``a`` of element ``e`` is the gradient of the linear hat function of
    local vertex ``a`` restricted to ``e``.
    """
    dim = coords.shape[1]
    x0 = coords[elems[:, 0]]
    jac = np.stack([coords[elems[:, k]] - x0 for k in range(1, dim + 1)], axis=2)
    inv = np.linalg.inv(jac)  # rows are grad(lambda_1..lambda_dim)
    grads = np.empty((elems.shape[0], dim + 1, dim))
    grads[:, 1:, :] = inv
    grads[:, 0, :] = -inv.sum(axis=1)
    return grads


@dataclass(frozen=True)
class HalfFacetMap:
    """Sibling half-facets and a vertex-to-half-facet map.

    Attributes
    ----------
    sibling : (E, dim+1) int array
        Encoded sibling half-facet, or -1 on the boundary.
    v2hf : (N,) int array
        One incident half-facet per vertex whose facet contains the vertex;
        a boundary half-facet is chosen whenever one exists.
    """

    dim: int
    sibling: np.ndarray
    v2hf: np.ndarray

    @property
    def facets_per_elem(self) -> int:
        return self.dim + 1

    def decode(self, hf: int) -> tuple[int, int]:
        return divmod(int(hf), self.facets_per_elem)

    def sibling_of(self, elem: int, facet: int) -> tuple[int, int] | None:
        s = self.sibling[elem, facet]
        return None if s < 0 else self.decode(s)

    def boundary_half_facets(self) -> np.ndarray:
        """(k, 2) array of (elem, local facet) pairs with no sibling."""
        return np.argwhere(self.sibling < 0)

    def neighbor_elements(self, elems: np.ndarray) -> np.ndarray:
        """Elements sharing a facet with any element in ``elems``."""
        sib = self.sibling[elems].ravel()
        return np.unique(sib[sib >= 0] // self.facets_per_elem)


def facet_nodes(elems: np.ndarray, facet: int) -> np.ndarray:
    """Node ids of local facet ``facet`` (the facet opposite that vertex)."""
    keep = [k for k in range(elems.shape[1]) if k != facet]
    return elems[:, keep]


def build_half_facets(mesh: "Mesh") -> HalfFacetMap:
    """Pair up coincident half-facets by sorting their node keys.

    Raises
    ------
    MeshError
        If a facet is shared by more than two elements.
    """
    elems = mesh.elems
    ne, nf = elems.shape
    keys = np.concatenate([np.sort(facet_nodes(elems, f), axis=1) for f in range(nf)])
    hf_ids = np.concatenate([np.arange(ne) * nf + f for f in range(nf)])

    order = np.lexsort(keys.T[::-1])
    keys, hf_ids = keys[order], hf_ids[order]
    same_as_next = np.all(keys[1:] == keys[:-1], axis=1)

    run = same_as_next[:-1] & same_as_next[1:]
    if run.any():
        bad = keys[np.argmax(run) + 1]
        raise MeshError(f"non-manifold facet with nodes {bad.tolist()} (>2 incident elements)")

    sibling = np.full(ne * nf, -1, dtype=np.int64)
    first = np.nonzero(same_as_next)[0]
    sibling[hf_ids[first]] = hf_ids[first + 1]
    sibling[hf_ids[first + 1]] = hf_ids[first]
    sibling = sibling.reshape(ne, nf)

    v2hf = np.full(mesh.node_count, -1, dtype=np.int64)
    # interior half-facets first, then boundary ones overwrite
    for boundary_pass in (False, True):
        for f in range(nf):
            sel = (sibling[:, f] < 0) == boundary_pass
            e = np.nonzero(sel)[0]
            for k in range(nf):
                if k == f:
                    continue
                v2hf[elems[e, k]] = e * nf + f
    return HalfFacetMap(dim=mesh.dim, sibling=sibling, v2hf=v2hf)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Linear simplicial mesh: segments (1D), triangles (2D) or tetrahedra (3D).

    Use :meth:`from_arrays` to build one; it validates ids, fixes element
    orientation and tags boundary nodes topologically.
    """

    coords: np.ndarray
    elems: np.ndarray
    boundary: np.ndarray
    _node_elems: tuple = field(default=(), repr=False)
    _hf: HalfFacetMap | None = field(default=None, repr=False)

    @classmethod
    def from_arrays(cls, coords, elems) -> "Mesh":
        coords = np.array(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        elems = np.array(elems, dtype=np.int64)
        dim = coords.shape[1]
        if dim not in (1, 2, 3):
            raise MeshError(f"unsupported dimension {dim}")
        if elems.ndim != 2 or elems.shape[1] != dim + 1:
            raise MeshError(f"{dim}D elements need {dim + 1} nodes, got shape {elems.shape}")
        n = coords.shape[0]
        if elems.size and (elems.min() < 0 or elems.max() >= n):
            bad = int(np.argmax((elems < 0).any(axis=1) | (elems >= n).any(axis=1)))
            raise MeshError(f"element {bad} references missing node: {elems[bad].tolist()}")
        srt = np.sort(elems, axis=1)
        dup = (srt[:, 1:] == srt[:, :-1]).any(axis=1)
        if dup.any():
            raise MeshError(f"element {int(np.argmax(dup))} has repeated nodes")

        vol = signed_volumes(coords, elems)
        if np.any(vol == 0.0):
            raise MeshError(f"element {int(np.argmax(vol == 0.0))} is degenerate")
        flip = vol < 0
        if flip.any():
            elems = elems.copy()
            elems[flip, 0], elems[flip, 1] = elems[flip, 1], elems[flip, 0].copy()

        mesh = cls(coords, elems, np.zeros(n, dtype=bool))
        hf = build_half_facets(mesh)
        boundary = np.zeros(n, dtype=bool)
        for f in range(dim + 1):
            open_facets = hf.sibling[:, f] < 0
            boundary[facet_nodes(elems[open_facets], f).ravel()] = True
        object.__setattr__(mesh, "boundary", boundary)
        object.__setattr__(mesh, "_hf", hf)
        for arr in (mesh.coords, mesh.elems, mesh.boundary):
            arr.flags.writeable = False
        return mesh

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def node_count(self) -> int:
        return self.coords.shape[0]

    @property
    def elem_count(self) -> int:
        return self.elems.shape[0]

    @property
    def half_facets(self) -> HalfFacetMap:
        if self._hf is None:
            object.__setattr__(self, "_hf", build_half_facets(self))
        return self._hf

    @property
    def interior_nodes(self) -> np.ndarray:
        return np.nonzero(~self.boundary)[0]

    @property
    def boundary_nodes(self) -> np.ndarray:
        return np.nonzero(self.boundary)[0]

    def volumes(self) -> np.ndarray:
        return signed_volumes(self.coords, self.elems)

    def node_elements(self, node: int) -> np.ndarray:
        """Elements incident on ``node`` (sorted)."""
        if not self._node_elems:
            order = np.argsort(self.elems.ravel(), kind="stable")
            elem_of = order // (self.dim + 1)
            counts = np.bincount(self.elems.ravel(), minlength=self.node_count)
            ptr = np.concatenate([[0], np.cumsum(counts)])
            object.__setattr__(self, "_node_elems", (ptr, elem_of))
        ptr, elem_of = self._node_elems
        return elem_of[ptr[node]:ptr[node + 1]]
