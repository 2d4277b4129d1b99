"""Preconditioned Krylov solvers: restarted GMRES and CG."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .csr import as_csr
from .precond import Preconditioner, make_preconditioner


@dataclass
class SolverReport:
    iterations: int
    final_relative_residual: float
    converged: bool
    wall_time: float
    message: str = ""
    history: list = field(default_factory=list, repr=False)


def _prepare(A, b, precond, symmetric):
    A = as_csr(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    b = np.asarray(b, dtype=float)
    if b.shape != (A.shape[0],):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({A.shape[0]},)")
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side is not finite")
    if isinstance(precond, str):
        precond = make_preconditioner(A, precond, symmetric=symmetric)
    elif precond is None:
        precond = Preconditioner()
    return A, b, precond


def gmres(A, b, precond="none", restart: int = 60, tol: float = 1e-12, maxit: int | None = None):
    """Right-preconditioned restarted GMRES with x0 = 0.

    Convergence is declared on the true residual ``||b - A x|| / ||b|| <= tol``,
    checked whenever the Arnoldi estimate says so and at every restart.
    Returns ``(x, SolverReport)``; non-convergence is reported, not raised.
    """
    start = time.perf_counter()
    A, b, M = _prepare(A, b, precond, symmetric=False)
    n = A.shape[0]
    maxit = maxit if maxit is not None else max(10 * n, 1000)
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, SolverReport(0, 0.0, True, time.perf_counter() - start, "zero right-hand side")

    history = []
    total = 0
    r = b.copy()
    rel = 1.0
    while total < maxit:
        beta = np.linalg.norm(r)
        rel = beta / bnorm
        if rel <= tol:
            break
        m = min(restart, maxit - total)
        V = np.zeros((m + 1, n))
        Z = np.zeros((m, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k_used = 0
        breakdown = False
        for k in range(m):
            Z[k] = M.apply(V[k])
            w = A @ Z[k]
            wnorm = np.linalg.norm(w)
            # classical Gram-Schmidt, applied twice
            h = V[: k + 1] @ w
            w -= V[: k + 1].T @ h
            h2 = V[: k + 1] @ w
            w -= V[: k + 1].T @ h2
            H[: k + 1, k] = h + h2
            H[k + 1, k] = np.linalg.norm(w)
            breakdown = H[k + 1, k] <= 1e-14 * wnorm
            if not breakdown:
                V[k + 1] = w / H[k + 1, k]
            for j in range(k):
                t = cs[j] * H[j, k] + sn[j] * H[j + 1, k]
                H[j + 1, k] = -sn[j] * H[j, k] + cs[j] * H[j + 1, k]
                H[j, k] = t
            denom = np.hypot(H[k, k], H[k + 1, k])
            cs[k], sn[k] = (1.0, 0.0) if denom == 0.0 else (H[k, k] / denom, H[k + 1, k] / denom)
            H[k, k] = cs[k] * H[k, k] + sn[k] * H[k + 1, k]
            H[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            total += 1
            k_used = k + 1
            history.append(abs(g[k + 1]) / bnorm)
            if abs(g[k + 1]) / bnorm <= tol or breakdown:
                break
        y = _back_substitute(H[:k_used, :k_used], g[:k_used])
        x += Z[:k_used].T @ y
        r = b - A @ x
        if breakdown and np.linalg.norm(r) / bnorm > tol:
            rel = np.linalg.norm(r) / bnorm
            return x, SolverReport(total, float(rel), False, time.perf_counter() - start, "breakdown", history)
    rel = np.linalg.norm(b - A @ x) / bnorm
    converged = bool(rel <= tol)
    msg = "converged" if converged else "maximum iterations reached"
    return x, SolverReport(total, float(rel), converged, time.perf_counter() - start, msg, history)


def _back_substitute(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    k = len(g)
    y = np.zeros(k)
    for i in range(k - 1, -1, -1):
        if R[i, i] == 0.0:
            continue
        y[i] = (g[i] - R[i, i + 1:] @ y[i + 1:]) / R[i, i]
    return y


def cg(A, b, precond="none", tol: float = 1e-12, maxit: int | None = None):
    """Preconditioned conjugate gradients with x0 = 0.

    A nonpositive curvature ``p^T A p <= 0`` stops the iteration and is
    reported as a failure.  ``"gauss_seidel"`` means symmetric Gauss-Seidel here.
    """
    start = time.perf_counter()
    A, b, M = _prepare(A, b, precond, symmetric=True)
    n = A.shape[0]
    maxit = maxit if maxit is not None else max(10 * n, 1000)
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, SolverReport(0, 0.0, True, time.perf_counter() - start, "zero right-hand side")

    history = []
    r = b.copy()
    z = M.apply(r)
    p = z.copy()
    rz = np.dot(r, z)
    it = 0
    msg = "maximum iterations reached"
    while it < maxit:
        Ap = A @ p
        curv = np.dot(p, Ap)
        if curv <= 0.0 or not np.isfinite(curv):
            msg = "indefinite: p^T A p <= 0"
            break
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Ap
        it += 1
        rel = np.linalg.norm(r) / bnorm
        history.append(rel)
        if rel <= tol:
            # confirm on the true residual; keep iterating from it otherwise
            r = b - A @ x
            if np.linalg.norm(r) / bnorm <= tol:
                msg = "converged"
                break
        z = M.apply(r)
        rz_new = np.dot(r, z)
        if rz_new <= 0.0 and np.linalg.norm(r) > 0.0:
            msg = "indefinite preconditioner"
            break
        p = z + (rz_new / rz) * p
        rz = rz_new
    rel = float(np.linalg.norm(b - A @ x) / bnorm)
    converged = bool(msg == "converged" and rel <= tol)
    return x, SolverReport(it, rel, converged, time.perf_counter() - start, msg, history)
