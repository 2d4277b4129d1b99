"""Row-wise assembly of AES-FEM and baseline P1 FEM systems.

Both methods test against the linear hat function ``psi_i`` of every
interior node.  The assembled operator is that of the strong form
``-lap(U) + c . grad(U) = rho``:

    A_ij = int grad(psi_i) . grad(phi_j) + int psi_i c . grad(phi_j)
    b_i  = int psi_i rho

For AES-FEM ``phi_j`` are the GLP basis functions of node ``i``'s own
stencil, so row ``i`` only touches that stencil.  Dirichlet nodes carry no
test function; their known values are moved to the right-hand side.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .glp import GlpBasis, eval_monomial_gradients, solve_glp, stencil_frame
from .mesh import Mesh, barycentric_gradients, select_stencil
from .quadrature import map_points, simplex_rule

logger = logging.getLogger(__name__)

KINDS = ("poisson", "convection_diffusion")


class AssemblyError(RuntimeError):
    pass


@dataclass(frozen=True)
class PdeSpec:
    """``-lap(U) [+ c . grad(U)] = rho`` with ``U = g`` on the boundary.

    ``rho`` and ``dirichlet_g`` take an (q, dim) array of points.
    """

    kind: str
    rho: Callable[[np.ndarray], np.ndarray]
    dirichlet_g: Callable[[np.ndarray], np.ndarray]
    velocity: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown PDE kind {self.kind!r}")
        if (self.velocity is not None) != (self.kind == "convection_diffusion"):
            raise ValueError("velocity is required for, and only for, convection_diffusion")
        if self.velocity is not None:
            object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))


@dataclass
class AssemblyOptions:
    ratio: float = 1.5
    eps: float = 0.01
    pivot_tol: float = 1e-8
    norm: str = "two"
    quad_exactness: int | None = None
    threads: int | None = None

    def exactness_for(self, degree: int) -> int:
        if self.quad_exactness is not None:
            return self.quad_exactness
        return min(max(degree + 1, 2), 8)


@dataclass
class LinearSystem:
    """Interior-DOF system with the Dirichlet data folded into ``b``."""

    A: sp.csr_matrix
    b: np.ndarray
    dof_of_node: np.ndarray  # -1 on Dirichlet nodes
    node_of_dof: np.ndarray
    dirichlet_values: np.ndarray  # per node; NaN on interior nodes
    bases: dict = field(default_factory=dict, repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def ndof(self) -> int:
        return len(self.node_of_dof)


def _thread_count(requested: int | None) -> int:
    if requested is None:
        requested = int(os.environ.get("AESFEM_THREADS", "1") or 1)
    if requested <= 0:
        requested = os.cpu_count() or 1
    return requested


def _dof_maps(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    node_of_dof = mesh.interior_nodes
    dof_of_node = np.full(mesh.node_count, -1, dtype=np.int64)
    dof_of_node[node_of_dof] = np.arange(len(node_of_dof))
    return dof_of_node, node_of_dof


def _dirichlet_values(mesh: Mesh, pde: PdeSpec) -> np.ndarray:
    g = np.full(mesh.node_count, np.nan)
    bnd = mesh.boundary_nodes
    if len(bnd):
        g[bnd] = pde.dirichlet_g(mesh.coords[bnd])
    return g


class _ElementData:
    """Per-element geometry and quadrature shared by all rows."""

    def __init__(self, mesh: Mesh, exactness: int):
        self.rule = simplex_rule(mesh.dim, exactness)
        self.grads = barycentric_gradients(mesh.coords, mesh.elems)
        self.volume = mesh.volumes()
        self.qpts = map_points(mesh.coords, mesh.elems, self.rule)
        ref = self.rule.weights.sum()
        self.wdet = self.volume[:, None] * (self.rule.weights / ref)[None, :]

    def load_vector(self, mesh: Mesh, rho) -> np.ndarray:
        """``int psi_i rho`` for every node."""
        ne, nq, dim = self.qpts.shape
        rho_q = np.asarray(rho(self.qpts.reshape(-1, dim)), dtype=float).reshape(ne, nq)
        contrib = np.einsum("eq,qa->ea", self.wdet * rho_q, self.rule.points)
        b = np.zeros(mesh.node_count)
        np.add.at(b, mesh.elems, contrib)
        return b


def _row_operator(mesh: Mesh, data: _ElementData, basis: GlpBasis, node: int, velocity) -> np.ndarray:
    """Row ``node`` of the operator over the columns of ``basis``'s stencil."""
    els = mesh.node_elements(node)
    local = np.argmax(mesh.elems[els] == node, axis=1)
    gpsi = data.grads[els, local]  # (ne, dim)
    nq, dim = data.qpts.shape[1], mesh.dim

    u = (data.qpts[els] - mesh.coords[node]).reshape(-1, dim)
    gmono = eval_monomial_gradients(basis.monomials, u)  # (ne*nq, n, dim)
    wd = data.wdet[els]  # (ne, nq)
    direction = np.repeat(gpsi, nq, axis=0) * wd.reshape(-1, 1)
    if velocity is not None:
        lam = data.rule.points[:, local].T  # (ne, nq) hat values at quad points
        direction = direction + (wd * lam).reshape(-1, 1) * velocity[None, :]
    t = np.einsum("pnd,pd->n", gmono, direction)
    return (t * basis.scaling) @ basis.C


def build_basis(mesh: Mesh, hf, node: int, degree: int, options: AssemblyOptions) -> GlpBasis:
    stencil = select_stencil(mesh, hf, node, degree, options.ratio)
    frame = stencil_frame(mesh, stencil)
    return solve_glp(frame, degree, eps=options.eps, pivot_tol=options.pivot_tol, norm=options.norm, node=node)


def assemble_aesfem(
    mesh: Mesh,
    hf,
    pde: PdeSpec,
    degree: int,
    options: AssemblyOptions | None = None,
    cache: dict | None = None,
) -> LinearSystem:
    """Assemble the AES-FEM system for ``pde`` with degree-``degree`` GLP bases.

    ``cache`` maps ``(node, degree)`` to a :class:`GlpBasis` and is filled as a
    side effect, so bases can be reused across PDEs on the same mesh.
    """
    options = options or AssemblyOptions()
    hf = mesh.half_facets if hf is None else hf
    cache = {} if cache is None else cache
    exactness = options.exactness_for(degree)
    data = _ElementData(mesh, exactness)
    dof_of_node, node_of_dof = _dof_maps(mesh)
    gvals = _dirichlet_values(mesh, pde)
    b_full = data.load_vector(mesh, pde.rho)
    velocity = pde.velocity

    def row(node):
        key = (int(node), degree)
        basis = cache.get(key)
        if basis is None:
            basis = build_basis(mesh, hf, int(node), degree, options)
            cache[key] = basis
        vals = _row_operator(mesh, data, basis, int(node), velocity)
        nodes = basis.frame.nodes
        on_bnd = mesh.boundary[nodes]
        rhs = b_full[node] - vals[on_bnd] @ gvals[nodes[on_bnd]]
        cols = dof_of_node[nodes[~on_bnd]]
        v = vals[~on_bnd]
        order = np.argsort(cols)
        return cols[order], v[order], rhs

    threads = _thread_count(options.threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, node_of_dof))
    else:
        rows = [row(n) for n in node_of_dof]

    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r[0]) for r in rows])
    indices = np.concatenate([r[0] for r in rows]) if rows else np.zeros(0, np.int64)
    values = np.concatenate([r[1] for r in rows]) if rows else np.zeros(0)
    b = np.array([r[2] for r in rows])
    for i, r in enumerate(rows):
        if not np.any(r[1]):
            raise AssemblyError(f"zero row for node {node_of_dof[i]}")
    A = sp.csr_matrix((values, indices, indptr), shape=(len(rows), len(rows)))
    ranks = [cache[(int(n), degree)] for n in node_of_dof]
    meta = {
        "method": "aesfem",
        "degree": degree,
        "quad_exactness": exactness,
        "ratio": options.ratio,
        "eps": options.eps,
        "pivot_tol": options.pivot_tol,
        "norm": options.norm,
        "min_effective_degree": min((bb.effective_degree for bb in ranks), default=degree),
    }
    return LinearSystem(A, b, dof_of_node, node_of_dof, gvals, bases=cache, meta=meta)


def assemble_fem_p1(mesh: Mesh, pde: PdeSpec, quad_exactness: int = 3) -> LinearSystem:
    """Standard P1 Galerkin system with strong Dirichlet elimination."""
    data = _ElementData(mesh, quad_exactness)
    if np.any(data.volume <= 0):
        raise AssemblyError(f"degenerate element {int(np.argmax(data.volume <= 0))}")
    local = np.einsum("ead,ebd->eab", data.grads, data.grads) * data.volume[:, None, None]
    if pde.velocity is not None:
        # int lambda_a (c . grad lambda_b) = |e| / (dim + 1) * c . grad lambda_b
        conv = (data.grads @ pde.velocity) * (data.volume / (mesh.dim + 1))[:, None]
        local = local + conv[:, None, :]
    nloc = mesh.dim + 1
    rows = np.repeat(mesh.elems, nloc, axis=1).ravel()
    cols = np.tile(mesh.elems, (1, nloc)).ravel()
    full = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(mesh.node_count,) * 2)

    dof_of_node, node_of_dof = _dof_maps(mesh)
    gvals = _dirichlet_values(mesh, pde)
    bnd = mesh.boundary_nodes
    b_full = data.load_vector(mesh, pde.rho)
    inner = full[node_of_dof]
    A = inner[:, node_of_dof].tocsr()
    A.sort_indices()
    b = b_full[node_of_dof] - inner[:, bnd] @ gvals[bnd]
    meta = {"method": "fem_p1", "degree": 1, "quad_exactness": quad_exactness}
    return LinearSystem(A, b, dof_of_node, node_of_dof, gvals, meta=meta)


def recover_solution(system: LinearSystem, x_interior) -> np.ndarray:
    """Full nodal field: Dirichlet values on the boundary, ``x`` inside."""
    x = np.asarray(x_interior, dtype=float)
    if x.shape != (system.ndof,):
        raise ValueError(f"expected {system.ndof} interior values, got shape {x.shape}")
    field_ = np.array(system.dirichlet_values, copy=True)
    field_[system.node_of_dof] = x
    return field_


def extract_interior(system: LinearSystem, field_) -> np.ndarray:
    return np.asarray(field_, dtype=float)[system.node_of_dof]


@dataclass(frozen=True)
class TruncationResidual:
    """Weak-form residual of the exact solution at every interior node.

    ``normalized`` divides by ``int |grad psi_i|``, the constant the error
    bound carries.
    """

    values: np.ndarray
    normalized: np.ndarray

    @property
    def max(self) -> float:
        return float(self.values.max())

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def max_normalized(self) -> float:
        return float(self.normalized.max())


def hat_gradient_mass(mesh: Mesh) -> np.ndarray:
    """``int |grad psi_i| dV`` for every node."""
    grads = barycentric_gradients(mesh.coords, mesh.elems)
    contrib = np.linalg.norm(grads, axis=2) * mesh.volumes()[:, None]
    out = np.zeros(mesh.node_count)
    np.add.at(out, mesh.elems, contrib)
    return out


def truncation_residual(
    mesh: Mesh,
    hf,
    pde: PdeSpec,
    degree: int,
    exact,
    options: AssemblyOptions | None = None,
) -> TruncationResidual:
    """``|sum_j a_ij U(u_j) - b_i|`` with exact nodal values and no solve.

    ``exact`` is anything with a vectorized ``U(points)`` method.
    """
    system = assemble_aesfem(mesh, hf, pde, degree, options)
    u_int = exact.U(mesh.coords[system.node_of_dof])
    r = np.abs(system.A @ u_int - system.b)
    c = hat_gradient_mass(mesh)[system.node_of_dof]
    return TruncationResidual(values=r, normalized=r / c)
