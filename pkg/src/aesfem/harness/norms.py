"""Discrete error norms and observed convergence rates."""

from __future__ import annotations

import math

import numpy as np

from ..quadrature import simplex_rule


def error_norms(mesh, numeric, exact) -> tuple[float, float]:
    """(Linf, L2) of the nodal error ``numeric - U``.

    Linf is the largest nodal error.  L2 integrates the square of the
    piecewise-linear interpolant of the nodal error with a degree-2 rule,
    which is exact for it.
    """
    numeric = np.asarray(numeric, dtype=float)
    if numeric.shape != (mesh.node_count,):
        raise ValueError(f"expected {mesh.node_count} nodal values, got shape {numeric.shape}")
    err = numeric - exact.U(mesh.coords)
    linf = float(np.max(np.abs(err))) if len(err) else 0.0
    rule = simplex_rule(mesh.dim, 2)
    e_q = err[mesh.elems] @ rule.points.T  # (E, q)
    ref = rule.weights.sum()
    l2sq = np.sum(mesh.volumes() * ((e_q**2) @ (rule.weights / ref)))
    return linf, float(math.sqrt(max(l2sq, 0.0)))


def _error_and_nodes(row, norm: str) -> tuple[float, int]:
    if isinstance(row, tuple):
        return float(row[0]), int(row[1])
    return float(getattr(row, norm)), int(row.nodes)


def convergence_rate(coarse, fine, dim: int, norm: str = "linf") -> float:
    """Average rate between two meshes from errors and node counts.

    ``rate = -log2(e_c / e_f) / log2((n_c / n_f)^(1/dim))``.  ``coarse`` and
    ``fine`` are ``(error, nodes)`` tuples or rows with ``nodes`` and a
    ``norm`` attribute.
    """
    e_c, n_c = _error_and_nodes(coarse, norm)
    e_f, n_f = _error_and_nodes(fine, norm)
    if e_c <= 0 or e_f <= 0 or not (math.isfinite(e_c) and math.isfinite(e_f)):
        raise ValueError("errors must be positive and finite")
    if n_c == n_f:
        raise ValueError("node counts must differ")
    return -math.log2(e_c / e_f) / math.log2((n_c / n_f) ** (1.0 / dim))
