"""Ring neighborhoods and stencil selection on simplicial meshes.

Integer rings grow by element adjacency: the 1-ring of a node is every node
of its incident elements and the (k+1)-ring adds the 1-rings of all k-ring
nodes.  Fractional rings sit in between:

* 2D, k+1/2: add the nodes of triangles sharing an edge with a k-ring triangle.
* 3D, k+1/3: add the nodes of tetrahedra sharing a face with a k-ring tetrahedron.
* 3D, k+2/3: add the nodes of every face (equivalently every tetrahedron)
  containing an edge of a k-ring tetrahedron.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .core import HalfFacetMap, Mesh

logger = logging.getLogger(__name__)

LEGAL_FRACTIONS = {
    1: (Fraction(0),),
    2: (Fraction(0), Fraction(1, 2)),
    3: (Fraction(0), Fraction(1, 3), Fraction(2, 3)),
}

# starting ring per (dim, degree)
_START_RING = {
    2: {2: (1, Fraction(1, 2)), 3: (2, 0), 4: (2, Fraction(1, 2)), 5: (3, 0), 6: (3, Fraction(1, 2))},
    3: {2: (1, 0), 3: (1, Fraction(1, 3)), 4: (1, Fraction(2, 3)), 5: (2, 0), 6: (2, Fraction(1, 3))},
}


class StencilError(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class RingSpec:
    whole: int
    fraction: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "fraction", Fraction(self.fraction))
        if self.whole < 1:
            raise ValueError("ring must be at least 1")

    def check(self, dim: int) -> None:
        if self.fraction not in LEGAL_FRACTIONS[dim]:
            raise ValueError(f"fraction {self.fraction} is not legal in {dim}D")

    def next(self, dim: int) -> "RingSpec":
        """The next larger ring in the dimension's fractional sequence."""
        steps = LEGAL_FRACTIONS[dim]
        i = steps.index(self.fraction)
        if i + 1 < len(steps):
            return RingSpec(self.whole, steps[i + 1])
        return RingSpec(self.whole + 1)

    @property
    def value(self) -> Fraction:
        return self.whole + self.fraction

    def __str__(self) -> str:
        return str(self.whole) if self.fraction == 0 else f"{self.whole}+{self.fraction}"


@dataclass(frozen=True)
class Stencil:
    center: int
    nodes: np.ndarray
    ring_used: RingSpec
    h: float

    @property
    def m(self) -> int:
        return len(self.nodes)


def _elements_of(mesh: Mesh, nodes) -> np.ndarray:
    return np.unique(np.concatenate([mesh.node_elements(v) for v in nodes]))


def _ring_elements(mesh: Mesh, node: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Elements and nodes of the k-ring."""
    nodes = np.array([node])
    elems = None
    for _ in range(k):
        elems = _elements_of(mesh, nodes)
        nodes = np.unique(mesh.elems[elems])
    return elems, nodes


def _edge_keys(elems: np.ndarray, n: int) -> np.ndarray:
    pairs = [np.sort(elems[:, [a, b]], axis=1) for a, b in combinations(range(elems.shape[1]), 2)]
    pairs = np.concatenate(pairs)
    return pairs[:, 0] * n + pairs[:, 1]


def ring_neighborhood(mesh: Mesh, hf: HalfFacetMap, node: int, ring: RingSpec) -> np.ndarray:
    """Nodes of the given ring around ``node``: the center first, then ascending ids."""
    ring.check(mesh.dim)
    elems, nodes = _ring_elements(mesh, node, ring.whole)
    frac = ring.fraction
    if frac == Fraction(1, 2) or frac == Fraction(1, 3):
        extra = hf.neighbor_elements(elems)
        nodes = np.union1d(nodes, mesh.elems[extra])
    elif frac == Fraction(2, 3):
        ring_edges = np.unique(_edge_keys(mesh.elems[elems], mesh.node_count))
        candidates = _elements_of(mesh, nodes)
        cand_edges = _edge_keys(mesh.elems[candidates], mesh.node_count)
        hit = np.isin(cand_edges, ring_edges).reshape(-1, len(candidates)).any(axis=0)
        nodes = np.union1d(nodes, mesh.elems[candidates[hit]])
    rest = nodes[nodes != node]
    return np.concatenate([[node], rest]).astype(np.int64)


def monomial_count(dim: int, degree: int) -> int:
    return math.comb(degree + dim, dim)


def start_ring(dim: int, degree: int) -> RingSpec:
    if dim == 1 or degree < 2:
        return RingSpec(1)
    whole, frac = _START_RING[dim][min(degree, 6)]
    return RingSpec(whole, Fraction(frac))


def characteristic_length(mesh: Mesh, node: int) -> float:
    """Mean distance from ``node`` to its 1-ring neighbours."""
    _, nbrs = _ring_elements(mesh, node, 1)
    nbrs = nbrs[nbrs != node]
    return float(np.mean(np.linalg.norm(mesh.coords[nbrs] - mesh.coords[node], axis=1)))


def select_stencil(mesh: Mesh, hf: HalfFacetMap, node: int, degree: int, ratio: float = 1.5) -> Stencil:
    """Grow a ring stencil around ``node`` until it holds ``ratio * n`` nodes.

    Starts from the ring suited to ``degree`` and steps through the
    fractional ring sequence.  If the whole mesh is exhausted with at least
    ``n`` nodes the stencil is returned with a warning; with fewer it fails.
    """
    if not 1 <= degree <= 6:
        raise ValueError("degree must be in [1, 6]")
    if ratio < 1:
        raise ValueError("ratio must be >= 1")
    n = monomial_count(mesh.dim, degree)
    target = ratio * n
    ring = start_ring(mesh.dim, degree)
    nodes = ring_neighborhood(mesh, hf, node, ring)
    whole_size = len(ring_neighborhood(mesh, hf, node, RingSpec(ring.whole)))
    while len(nodes) < target:
        bigger = ring.next(mesh.dim)
        grown = ring_neighborhood(mesh, hf, node, bigger)
        if bigger.fraction == 0:
            if len(grown) == whole_size:
                break  # a whole ring added nothing: the mesh is exhausted
            whole_size = len(grown)
        ring, nodes = bigger, grown
    if len(nodes) < n:
        raise StencilError(
            f"node {node}: only {len(nodes)} nodes reachable, degree {degree} needs {n}"
        )
    if len(nodes) < target:
        logger.warning("node %d: stencil has %d nodes, below the target %.1f", node, len(nodes), target)
    return Stencil(center=int(node), nodes=nodes, ring_used=ring, h=characteristic_length(mesh, node))
