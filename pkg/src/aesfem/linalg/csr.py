"""CSR matrices (backed by :mod:`scipy.sparse`) and Matrix Market interchange."""

from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse as sp

CsrMatrix = sp.csr_matrix


def as_csr(A) -> sp.csr_matrix:
    """Canonical CSR: duplicates summed, column indices strictly increasing per row."""
    if sp.issparse(A):
        A = A.tocsr(copy=True)
    else:
        A = sp.csr_matrix(np.atleast_2d(np.asarray(A, dtype=float)))
    A.sum_duplicates()
    A.sort_indices()
    A = A.astype(float)
    return A


def spmv(A: sp.csr_matrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise ValueError(f"dimension mismatch: matrix {A.shape}, vector {x.shape}")
    return A @ x


def diagonal_positions(A: sp.csr_matrix) -> np.ndarray:
    """Index into ``A.data`` of each row's diagonal entry, -1 where it is absent."""
    n = A.shape[0]
    pos = np.full(n, -1, dtype=np.int64)
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    hit = np.nonzero(A.indices == rows)[0]
    pos[rows[hit]] = hit
    return pos


def write_matrix_market(A, path, comment: str = "") -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(A), comment=comment, field="real", symmetry="general")


def read_matrix_market(path) -> sp.csr_matrix:
    return as_csr(scipy.io.mmread(str(path)))
