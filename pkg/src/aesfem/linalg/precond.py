"""Preconditioners: Jacobi, Gauss-Seidel, ILU(0) and IC(0).

Factorizations keep the sparsity pattern of ``A`` (no fill).  A zero or
nonpositive pivot raises :class:`FactorizationError` naming the row; callers
such as the mesh-quality study record that as a result, not a crash.
"""

from __future__ import annotations

import numba
import numpy as np
import scipy.sparse as sp

from .csr import as_csr, diagonal_positions

KINDS = ("none", "jacobi", "gauss_seidel", "ilu0", "ic0")


class FactorizationError(ArithmeticError):
    def __init__(self, row: int, pivot: float, kind: str):
        super().__init__(f"{kind}: bad pivot {pivot:.3e} at row {row}")
        self.row = row
        self.pivot = pivot


@numba.njit(cache=True)
def _ilu0(indptr, indices, data, diag):
    n = len(indptr) - 1
    lu = data.copy()
    marker = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            marker[indices[p]] = p
        for p in range(indptr[i], indptr[i + 1]):
            k = indices[p]
            if k >= i:
                break
            lu[p] /= lu[diag[k]]
            for q in range(diag[k] + 1, indptr[k + 1]):
                pos = marker[indices[q]]
                if pos >= 0:
                    lu[pos] -= lu[p] * lu[q]
        if lu[diag[i]] == 0.0 or not np.isfinite(lu[diag[i]]):
            return lu, i
        for p in range(indptr[i], indptr[i + 1]):
            marker[indices[p]] = -1
    return lu, -1


@numba.njit(cache=True)
def _lu_solve(indptr, indices, lu, diag, r):
    n = len(indptr) - 1
    y = r.copy()
    for i in range(n):
        s = y[i]
        for p in range(indptr[i], diag[i]):
            s -= lu[p] * y[indices[p]]
        y[i] = s
    for i in range(n - 1, -1, -1):
        s = y[i]
        for p in range(diag[i] + 1, indptr[i + 1]):
            s -= lu[p] * y[indices[p]]
        y[i] = s / lu[diag[i]]
    return y


@numba.njit(cache=True)
def _ic0(indptr, indices, data, diag):
    """Row-oriented IC(0) on the lower triangle; returns L values in A's layout."""
    n = len(indptr) - 1
    L = np.zeros_like(data)
    for i in range(n):
        for p in range(indptr[i], diag[i] + 1):
            k = indices[p]
            # s = a_ik - sum_{j<k} l_ij l_kj over the common pattern
            s = data[p]
            a = indptr[i]
            b = indptr[k]
            while a < p and b < diag[k]:
                ca = indices[a]
                cb = indices[b]
                if ca == cb:
                    s -= L[a] * L[b]
                    a += 1
                    b += 1
                elif ca < cb:
                    a += 1
                else:
                    b += 1
            if k < i:
                L[p] = s / L[diag[k]]
            else:
                if s <= 0.0 or not np.isfinite(s):
                    return L, i, s
                L[p] = np.sqrt(s)
    return L, -1, 0.0


@numba.njit(cache=True)
def _ic_solve(indptr, indices, L, diag, r):
    n = len(indptr) - 1
    y = r.copy()
    for i in range(n):
        s = y[i]
        for p in range(indptr[i], diag[i]):
            s -= L[p] * y[indices[p]]
        y[i] = s / L[diag[i]]
    # backward with L^T, sweeping rows of L as columns of L^T
    for i in range(n - 1, -1, -1):
        y[i] /= L[diag[i]]
        for p in range(indptr[i], diag[i]):
            y[indices[p]] -= L[p] * y[i]
    return y


@numba.njit(cache=True)
def _gs_forward(indptr, indices, data, diag, r):
    n = len(indptr) - 1
    z = np.zeros(n)
    for i in range(n):
        s = r[i]
        for p in range(indptr[i], diag[i]):
            s -= data[p] * z[indices[p]]
        z[i] = s / data[diag[i]]
    return z


@numba.njit(cache=True)
def _gs_backward(indptr, indices, data, diag, r):
    n = len(indptr) - 1
    z = np.zeros(n)
    for i in range(n - 1, -1, -1):
        s = r[i]
        for p in range(diag[i] + 1, indptr[i + 1]):
            s -= data[p] * z[indices[p]]
        z[i] = s / data[diag[i]]
    return z


class Preconditioner:
    """Applies ``M^-1``; the identity by default."""

    kind = "none"

    def apply(self, r: np.ndarray) -> np.ndarray:
        return r

    __call__ = apply


def _checked_diag(A: sp.csr_matrix, kind: str) -> np.ndarray:
    diag = diagonal_positions(A)
    missing = np.nonzero(diag < 0)[0]
    if len(missing):
        raise FactorizationError(int(missing[0]), 0.0, kind)
    zero = np.nonzero(A.data[diag] == 0.0)[0]
    if len(zero):
        raise FactorizationError(int(zero[0]), 0.0, kind)
    return diag


class Jacobi(Preconditioner):
    kind = "jacobi"

    def __init__(self, A):
        A = as_csr(A)
        self.inv_diag = 1.0 / A.data[_checked_diag(A, self.kind)]

    def apply(self, r):
        return self.inv_diag * r


class GaussSeidel(Preconditioner):
    """One forward sweep, ``M = D + L``; ``symmetric=True`` adds a backward sweep (SGS)."""

    kind = "gauss_seidel"

    def __init__(self, A, symmetric: bool = False):
        self.A = as_csr(A)
        self.diag = _checked_diag(self.A, self.kind)
        self.symmetric = symmetric

    def apply(self, r):
        A = self.A
        z = _gs_forward(A.indptr, A.indices, A.data, self.diag, np.asarray(r, dtype=float))
        if self.symmetric:
            z = _gs_backward(A.indptr, A.indices, A.data, self.diag, A.data[self.diag] * z)
        return z


class ILU0(Preconditioner):
    kind = "ilu0"

    def __init__(self, A):
        A = as_csr(A)
        self.indptr, self.indices = A.indptr, A.indices
        self.diag = _checked_diag(A, self.kind)
        self.lu, bad = _ilu0(A.indptr, A.indices, A.data, self.diag)
        if bad >= 0:
            raise FactorizationError(int(bad), float(self.lu[self.diag[bad]]), self.kind)

    def apply(self, r):
        return _lu_solve(self.indptr, self.indices, self.lu, self.diag, np.asarray(r, dtype=float))

    def factors(self) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """(unit lower L, upper U) as sparse matrices."""
        n = len(self.indptr) - 1
        M = sp.csr_matrix((self.lu, self.indices, self.indptr), shape=(n, n))
        return sp.tril(M, -1, format="csr") + sp.identity(n, format="csr"), sp.triu(M, format="csr")


class IC0(Preconditioner):
    kind = "ic0"

    def __init__(self, A):
        A = as_csr(A)
        self.indptr, self.indices = A.indptr, A.indices
        self.diag = _checked_diag(A, self.kind)
        self.L, bad, pivot = _ic0(A.indptr, A.indices, A.data, self.diag)
        if bad >= 0:
            raise FactorizationError(int(bad), float(pivot), self.kind)

    def apply(self, r):
        return _ic_solve(self.indptr, self.indices, self.L, self.diag, np.asarray(r, dtype=float))

    def factor(self) -> sp.csr_matrix:
        n = len(self.indptr) - 1
        return sp.tril(sp.csr_matrix((self.L, self.indices, self.indptr), shape=(n, n)), format="csr")


def ilu0(A) -> ILU0:
    return ILU0(A)


def ic0(A) -> IC0:
    return IC0(A)


def make_preconditioner(A, kind: str, symmetric: bool = False) -> Preconditioner:
    """Build a preconditioner by name; ``symmetric`` selects SGS for CG."""
    if kind == "none":
        return Preconditioner()
    if kind == "jacobi":
        return Jacobi(A)
    if kind == "gauss_seidel":
        return GaussSeidel(A, symmetric=symmetric)
    if kind == "ilu0":
        return ILU0(A)
    if kind == "ic0":
        return IC0(A)
    raise ValueError(f"unknown preconditioner {kind!r}; choose from {', '.join(KINDS)}")
