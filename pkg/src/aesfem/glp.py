"""Generalized Lagrange polynomial (GLP) basis functions.

For a stencil of ``m`` points around a center, the basis is built from the
weighted, column-scaled least-squares problem ``min ||W (V c - e_j)||`` for
every ``j`` at once.  With the Taylor-scaled Vandermonde ``V`` (monomials
times ``1/a!``), ``Vt = W V S`` and a truncated column-pivoted QR of ``Vt``,
the coefficient matrix is ``C = S Vt^+ W`` (``n x m``) and

    phi_j(u) = (D P(u))^T C[:, j]

where ``P`` holds the monomials and ``D`` the inverse factorials.  Column
``j`` of ``C`` therefore holds Taylor coefficients (value, gradient, ...) of
``phi_j`` at the center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla


class GlpError(RuntimeError):
    pass


@dataclass(frozen=True)
class MonomialBasis:
    """Monomials of total degree <= ``degree`` in graded lexicographic order."""

    dim: int
    degree: int
    exponents: np.ndarray  # (n, dim)

    @property
    def n(self) -> int:
        return len(self.exponents)

    @property
    def total_degrees(self) -> np.ndarray:
        return self.exponents.sum(axis=1)


def _exponents_of_degree(dim: int, k: int):
    if dim == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in _exponents_of_degree(dim - 1, k - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def monomials(dim: int, degree: int) -> MonomialBasis:
    """``monomials(2, 2)`` gives 1, u, v, u^2, uv, v^2."""
    if not 1 <= dim <= 3:
        raise ValueError("dim must be 1, 2 or 3")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    exps = [e for k in range(degree + 1) for e in _exponents_of_degree(dim, k)]
    arr = np.array(exps, dtype=np.int64).reshape(-1, dim)
    arr.flags.writeable = False
    return MonomialBasis(dim, degree, arr)


def taylor_scaling(basis: MonomialBasis) -> np.ndarray:
    """Diagonal of ``D``: ``1 / (a_1! ... a_k!)`` for each exponent tuple."""
    fact = np.array([math.factorial(k) for k in range(basis.degree + 1)], dtype=float)
    return 1.0 / np.prod(fact[basis.exponents], axis=1)


def eval_monomials(basis: MonomialBasis, points: np.ndarray) -> np.ndarray:
    """Monomial values at ``points`` (q, dim), shape (q, n)."""
    points = np.atleast_2d(points)
    powers = points[:, :, None] ** np.arange(basis.degree + 1)  # (q, dim, deg+1)
    out = np.ones((points.shape[0], basis.n))
    for d in range(basis.dim):
        out *= powers[:, d, basis.exponents[:, d]]
    return out


def eval_monomial_gradients(basis: MonomialBasis, points: np.ndarray) -> np.ndarray:
    """Monomial gradients at ``points``, shape (q, n, dim)."""
    points = np.atleast_2d(points)
    q = points.shape[0]
    deg = basis.degree
    powers = np.ones((q, basis.dim, deg + 2))
    powers[:, :, 1:] = points[:, :, None] ** np.arange(deg + 1)  # powers[..., k+1] = x^k
    exps = basis.exponents
    # value factor of coordinate d for each monomial, x^a_d
    factors = powers[:, :, 1:][:, np.arange(basis.dim)[:, None], exps.T]  # (q, dim, n)
    grads = np.empty((q, basis.n, basis.dim))
    for d in range(basis.dim):
        # a_d x^(a_d - 1); index a_d in `powers` is x^(a_d - 1), or 1 for a_d = 0
        deriv = exps[:, d] * powers[:, d, exps[:, d]]
        g = deriv.copy()
        for e in range(basis.dim):
            if e != d:
                g = g * factors[:, e, :]
        grads[:, :, d] = g
    return grads


@dataclass(frozen=True)
class StencilFrame:
    """Stencil points in coordinates centered on the stencil's first node."""

    center: np.ndarray
    local_coords: np.ndarray  # (m, dim), row 0 is the center
    h: float
    nodes: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.local_coords.shape[0]

    @property
    def dim(self) -> int:
        return self.local_coords.shape[1]

    @classmethod
    def from_points(cls, points, h: float, nodes=None) -> "StencilFrame":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(points[0].copy(), points - points[0], float(h), nodes)


def stencil_frame(mesh, stencil) -> StencilFrame:
    return StencilFrame.from_points(mesh.coords[stencil.nodes], stencil.h, stencil.nodes)


def vandermonde(frame: StencilFrame, basis: MonomialBasis) -> np.ndarray:
    """Plain monomial Vandermonde matrix, shape (m, n)."""
    if frame.dim != basis.dim:
        raise ValueError("frame and basis dimensions differ")
    return eval_monomials(basis, frame.local_coords)


def wls_weights(frame: StencilFrame, eps: float = 0.01) -> np.ndarray:
    """Inverse-distance weights ``(|u_i| / h + eps)^-1``."""
    if frame.h <= 0:
        raise ValueError("characteristic length must be positive")
    dist = np.linalg.norm(frame.local_coords, axis=1)
    return 1.0 / (dist / frame.h + eps)


def column_scaling(wv: np.ndarray, norm: str = "two", exponents=None) -> np.ndarray:
    """Diagonal of ``S`` so that every column of ``wv @ diag(S)`` has unit norm."""
    if norm == "two":
        col = np.linalg.norm(wv, axis=0)
    elif norm == "inf":
        col = np.abs(wv).max(axis=0)
    else:
        raise ValueError(f"unknown norm {norm!r}")
    zero = np.nonzero(col == 0.0)[0]
    if len(zero):
        j = int(zero[0])
        which = tuple(int(a) for a in exponents[j]) if exponents is not None else j
        raise GlpError(f"zero column for monomial {which}")
    return 1.0 / col


@dataclass(frozen=True)
class GlpBasis:
    """Coefficients of the GLP basis functions of one stencil."""

    C: np.ndarray  # (n, m)
    monomials: MonomialBasis
    scaling: np.ndarray  # Taylor diagonal D
    frame: StencilFrame
    rank_used: int
    effective_degree: int
    kept: np.ndarray  # monomial indices that survived pivoting

    @property
    def degree(self) -> int:
        return self.monomials.degree

    @property
    def dim(self) -> int:
        return self.monomials.dim

    @property
    def m(self) -> int:
        return self.C.shape[1]


def _effective_degree(basis: MonomialBasis, kept: np.ndarray) -> int:
    kept_set = set(int(k) for k in kept)
    tdeg = basis.total_degrees
    eff = -1
    for d in range(basis.degree + 1):
        if all(j in kept_set for j in np.nonzero(tdeg == d)[0]):
            eff = d
        else:
            break
    return eff


def weighted_system(frame: StencilFrame, basis: MonomialBasis, eps: float = 0.01, norm: str = "two",
                    weights: np.ndarray | None = None, node: int | None = None):
    """``(V, W, D, S)`` diagonals and matrix of the scaled least-squares problem.

    Identically zero columns of ``W V D`` (e.g. axis-aligned collinear
    stencils) keep unit scaling so the pivoted QR drops them.
    """
    v = vandermonde(frame, basis)
    w = wls_weights(frame, eps) if weights is None else np.asarray(weights, dtype=float)
    dscale = taylor_scaling(basis)
    wv = w[:, None] * v * dscale[None, :]
    live = np.any(wv != 0.0, axis=0)
    if not live.any():
        raise GlpError(f"degenerate stencil at node {node}")
    s = np.ones(basis.n)
    s[live] = column_scaling(wv[:, live], norm)
    return v, w, dscale, s


def solve_glp(
    frame: StencilFrame,
    degree: int,
    eps: float = 0.01,
    pivot_tol: float = 1e-8,
    norm: str = "two",
    node: int | None = None,
    weights: np.ndarray | None = None,
) -> GlpBasis:
    """Build the GLP basis of degree ``degree`` over ``frame``.

    Pivots of the column-pivoted QR below ``pivot_tol * |r_11|`` are
    truncated; the dropped monomials get zero coefficients.  ``weights``
    overrides the inverse-distance row weights.

    Raises
    ------
    GlpError
        When no pivot survives (degenerate stencil).
    """
    basis = monomials(frame.dim, degree)
    v, w, dscale, s = weighted_system(frame, basis, eps, norm, weights, node)
    vt = w[:, None] * v * (dscale * s)[None, :]

    q, r, piv = sla.qr(vt, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        raise GlpError(f"degenerate stencil at node {node}")
    rank = int(np.count_nonzero(diag >= pivot_tol * diag[0]))
    kept = piv[:rank]

    # basic solution of the truncated problem for all right-hand sides W e_j
    d = np.zeros((basis.n, frame.m))
    d[kept] = sla.solve_triangular(r[:rank, :rank], q[:, :rank].T * w[None, :])
    c = s[:, None] * d
    return GlpBasis(
        C=c,
        monomials=basis,
        scaling=dscale,
        frame=frame,
        rank_used=rank,
        effective_degree=_effective_degree(basis, kept),
        kept=np.sort(kept),
    )


def eval_basis(b: GlpBasis, points) -> np.ndarray:
    """Basis values at local point(s): shape (m,) for one point, (q, m) for many."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    vals = (eval_monomials(b.monomials, pts.reshape(-1, b.dim)) * b.scaling) @ b.C
    return vals[0] if single else vals


def eval_basis_gradient(b: GlpBasis, points) -> np.ndarray:
    """Basis gradients at local point(s): shape (m, dim) or (q, m, dim)."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    g = eval_monomial_gradients(b.monomials, pts.reshape(-1, b.dim)) * b.scaling[None, :, None]
    out = np.einsum("qnd,nm->qmd", g, b.C)
    return out[0] if single else out
