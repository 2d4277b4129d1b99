"""Sparse kernels, preconditioners, Krylov solvers and condition estimation."""

from .condest import condition_estimate, splu_solver
from .csr import CsrMatrix, as_csr, diagonal_positions, read_matrix_market, spmv, write_matrix_market
from .krylov import SolverReport, cg, gmres
from .precond import (
    IC0,
    ILU0,
    KINDS,
    FactorizationError,
    GaussSeidel,
    Jacobi,
    Preconditioner,
    ic0,
    ilu0,
    make_preconditioner,
)

__all__ = [
    "CsrMatrix",
    "FactorizationError",
    "GaussSeidel",
    "IC0",
    "ILU0",
    "Jacobi",
    "KINDS",
    "Preconditioner",
    "SolverReport",
    "as_csr",
    "cg",
    "condition_estimate",
    "diagonal_positions",
    "gmres",
    "ic0",
    "ilu0",
    "make_preconditioner",
    "read_matrix_market",
    "splu_solver",
    "spmv",
    "write_matrix_market",
]
