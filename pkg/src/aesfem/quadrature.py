"""Quadrature on linear simplices.

Rules are conical products of Gauss-Jacobi rules mapped from the cube onto
the reference simplex (collapsed coordinates).  A rule with ``k`` points per
direction integrates every polynomial of total degree ``2k - 1`` exactly and
all weights are positive.  Rules are built once per (dim, exactness) and
cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_EXACTNESS = 8

REFERENCE_VOLUME = {1: 1.0, 2: 0.5, 3: 1.0 / 6.0}


@dataclass(frozen=True)
class QuadratureRule:
    dim: int
    exactness: int
    points: np.ndarray  # barycentric, (q, dim+1)
    weights: np.ndarray  # (q,), sum = reference volume

    @property
    def local_points(self) -> np.ndarray:
        """Reference-simplex coordinates (drop the first barycentric)."""
        return self.points[:, 1:]


def _gauss_jacobi01(k: int, alpha: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [0, 1] for the weight (1 - s)^alpha."""
    x, w = roots_jacobi(k, alpha, 0)
    return (1.0 + x) / 2.0, w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def simplex_rule(dim: int, exactness: int) -> QuadratureRule:
    """Rule on the reference simplex exact for total degree <= ``exactness``."""
    if dim not in (1, 2, 3):
        raise ValueError("dim must be 1, 2 or 3")
    if not 1 <= exactness <= MAX_EXACTNESS:
        raise ValueError(f"unsupported exactness {exactness} (supported: 1..{MAX_EXACTNESS})")
    k = (exactness + 2) // 2
    # collapsed coordinate s_i carries the Jacobian factor (1 - s_i)^(dim-1-i)
    factors = [_gauss_jacobi01(k, dim - 1 - i) for i in range(dim)]
    grids = np.meshgrid(*[f[0] for f in factors], indexing="ij")
    wgrids = np.meshgrid(*[f[1] for f in factors], indexing="ij")
    s = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)

    x = np.empty_like(s)
    remaining = np.ones(len(s))
    for i in range(dim):
        x[:, i] = s[:, i] * remaining
        remaining = remaining * (1.0 - s[:, i])
    bary = np.column_stack([1.0 - x.sum(axis=1), x])
    bary = np.clip(bary, 0.0, 1.0)
    for arr in (bary, w):
        arr.flags.writeable = False
    return QuadratureRule(dim, exactness, bary, w)


def monomial_simplex_integral(dim: int, exponents) -> Fraction:
    """Exact integral of ``prod u_i^a_i`` over the reference simplex."""
    exponents = [int(a) for a in exponents]
    if len(exponents) != dim:
        raise ValueError("need one exponent per dimension")
    num = math.prod(math.factorial(a) for a in exponents)
    return Fraction(num, math.factorial(sum(exponents) + dim))


def element_jacobians(coords: np.ndarray, elems: np.ndarray) -> np.ndarray:
    """Affine-map Jacobians, shape (E, dim, dim); column k is x_{k+1} - x_0."""
    dim = coords.shape[1]
    x0 = coords[elems[:, 0]]
    return np.stack([coords[elems[:, k]] - x0 for k in range(1, dim + 1)], axis=2)


def map_points(coords: np.ndarray, elems: np.ndarray, rule: QuadratureRule) -> np.ndarray:
    """Physical images of the rule's points on each element, shape (E, q, dim)."""
    verts = coords[elems]  # (E, dim+1, dim)
    return np.einsum("qa,ead->eqd", rule.points, verts)


def integrate_on_element(mesh, elem: int, rule: QuadratureRule, f) -> float:
    """Integrate ``f`` (vectorized over (q, dim) points) over one element."""
    if rule.dim != mesh.dim:
        raise ValueError("rule and mesh dimensions differ")
    el = mesh.elems[[elem]]
    det = abs(np.linalg.det(element_jacobians(mesh.coords, el))[0])
    if det == 0.0:
        raise ValueError(f"element {elem} is degenerate")
    pts = map_points(mesh.coords, el, rule)[0]
    return float(det * np.dot(rule.weights, f(pts)))
