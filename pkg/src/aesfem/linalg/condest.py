"""Lower-bound estimate of the 2-norm condition number.

Ritz values of a symmetric positive semidefinite operator lie inside its
spectrum, so Lanczos on ``A^T A`` gives ``sigma_max_hat <= sigma_max``.
For the small end, Lanczos on ``(A^T A)^-1`` (when solves are supplied) or
the smallest Ritz value of ``A^T A`` gives ``sigma_min_hat >= sigma_min``.
The ratio therefore never exceeds the true condition number.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import splu

from .csr import as_csr


def _lanczos_extremes(op: Callable[[np.ndarray], np.ndarray], n: int, k: int, rng) -> tuple[float, float]:
    """Smallest and largest Ritz values after ``k`` steps, full reorthogonalization."""
    k = max(1, min(k, n))
    Q = np.zeros((k + 1, n))
    alpha = np.zeros(k)
    beta = np.zeros(k)
    q = rng.standard_normal(n)
    Q[0] = q / np.linalg.norm(q)
    steps = 0
    for j in range(k):
        w = op(Q[j])
        alpha[j] = Q[j] @ w
        w -= Q[: j + 1].T @ (Q[: j + 1] @ w)
        w -= Q[: j + 1].T @ (Q[: j + 1] @ w)
        steps = j + 1
        b = np.linalg.norm(w)
        beta[j] = b
        if b <= 1e-14 * max(abs(alpha[j]), 1e-300):
            break
        Q[j + 1] = w / b
    if steps == 1:
        return float(alpha[0]), float(alpha[0])
    ritz = eigh_tridiagonal(alpha[:steps], beta[: steps - 1], eigvals_only=True)
    return float(ritz[0]), float(ritz[-1])


def condition_estimate(A, solve: Callable | None = None, krylov_dim: int = 100, seed: int = 0) -> float:
    """Krylov lower bound on ``kappa_2(A)``.

    Parameters
    ----------
    A : sparse or dense square matrix
    solve : callable, optional
        ``solve(v, trans)`` returning ``A^-1 v`` (``trans=False``) or
        ``A^-T v`` (``trans=True``).  Without it the small singular value
        comes from the same Lanczos run as the large one, which is a weaker
        (but still valid) bound.
    krylov_dim : int
        Lanczos steps per run.
    seed : int
        Seed for the starting vectors.

    Returns
    -------
    float
        ``sigma_max_hat / sigma_min_hat``; ``inf`` if the estimate of the
        smallest singular value is zero.
    """
    A = as_csr(A)
    n, m = A.shape
    if n != m:
        raise ValueError("matrix must be square")
    if n == 0:
        return 1.0
    At = A.T.tocsr()
    rng = np.random.default_rng(seed)
    lo, hi = _lanczos_extremes(lambda v: At @ (A @ v), n, krylov_dim, rng)
    if hi <= 0.0:
        return float("inf")
    if solve is not None:
        _, inv_hi = _lanczos_extremes(lambda v: solve(solve(v, True), False), n, krylov_dim, rng)
        if not np.isfinite(inv_hi) or inv_hi <= 0.0:
            return float("inf")
        lo = 1.0 / inv_hi
    if lo <= 0.0:
        return float("inf")
    return float(np.sqrt(hi / lo))


def splu_solver(A) -> Callable[[np.ndarray, bool], np.ndarray]:
    """``solve(v, trans)`` backed by a sparse LU of ``A`` (SuperLU)."""
    lu = splu(as_csr(A).tocsc())
    return lambda v, trans=False: lu.solve(np.asarray(v, dtype=float), trans="T" if trans else "N")
