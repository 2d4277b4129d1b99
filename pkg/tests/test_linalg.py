import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from aesfem.assembly import PdeSpec, assemble_aesfem, assemble_fem_p1
from aesfem.linalg import (
    FactorizationError,
    as_csr,
    cg,
    condition_estimate,
    gmres,
    ic0,
    ilu0,
    make_preconditioner,
    read_matrix_market,
    splu_solver,
    spmv,
    write_matrix_market,
)
from aesfem.mesh import distort_mesh, generate_box_mesh


def dominant(n, seed, symmetric=False):
    rng = np.random.default_rng(seed)
    A = sp.random(n, n, density=0.1, random_state=rng).toarray()
    if symmetric:
        A = A + A.T
    A += np.diag(np.abs(A).sum(axis=1) + 1)
    return A


def poisson_1d(n):
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


def constant_pde(dim):
    return PdeSpec("poisson", lambda x: np.ones(len(x)), lambda x: np.zeros(len(x)))


class TestCsr:
    def test_spmv(self):
        A = as_csr([[4, 1], [1, 3]])
        np.testing.assert_array_equal(spmv(A, [1, 2]), [6, 7])
        np.testing.assert_array_equal(spmv(as_csr(np.eye(3)), [1, 2, 3]), [1, 2, 3])
        np.testing.assert_array_equal(spmv(as_csr(np.zeros((2, 2))), [1, 2]), 0)

    def test_spmv_mismatch(self):
        with pytest.raises(ValueError):
            spmv(as_csr(np.eye(3)), [1, 2])

    def test_canonical(self):
        A = sp.csr_matrix(([1.0, 2.0, 3.0], ([0, 0, 0], [2, 0, 2])), shape=(1, 3))
        B = as_csr(A)
        assert B.indices.tolist() == [0, 2] and B.data.tolist() == [2.0, 4.0]

    def test_matrix_market_round_trip(self, tmp_path):
        A = as_csr(dominant(20, 0))
        write_matrix_market(A, tmp_path / "a.mtx")
        assert (tmp_path / "a.mtx").read_text().startswith("%%MatrixMarket matrix coordinate real general")
        B = read_matrix_market(tmp_path / "a.mtx")
        np.testing.assert_allclose(B.toarray(), A.toarray(), rtol=1e-15)


class TestGmres:
    def test_identity(self):
        b = np.arange(1.0, 6.0)
        x, rep = gmres(sp.identity(5), b)
        np.testing.assert_allclose(x, b)
        assert rep.converged and rep.iterations == 1

    def test_two_by_two(self):
        x, rep = gmres([[4.0, 1.0], [1.0, 3.0]], [1.0, 2.0])
        np.testing.assert_allclose(x, [1 / 11, 7 / 11], rtol=1e-14)
        assert rep.converged

    def test_zero_rhs(self):
        x, rep = gmres(np.eye(3), np.zeros(3))
        assert rep.converged and not x.any()

    @pytest.mark.parametrize("precond", ["none", "jacobi", "gauss_seidel", "ilu0"])
    def test_dominant_against_dense(self, precond):
        A = dominant(50, 1)
        b = np.random.default_rng(2).normal(size=50)
        x, rep = gmres(A, b, precond=precond)
        assert rep.converged and rep.final_relative_residual <= 1e-12
        np.testing.assert_allclose(x, np.linalg.solve(A, b), rtol=1e-9)
        true = np.linalg.norm(b - A @ x) / np.linalg.norm(b)
        assert true == pytest.approx(rep.final_relative_residual, rel=1e-10, abs=1e-14)

    def test_nonconvergence_is_reported(self):
        A = dominant(80, 3)
        b = np.ones(80)
        x, rep = gmres(A, b, restart=2, maxit=3, tol=1e-14)
        assert not rep.converged
        assert isinstance(rep.converged, bool)

    def test_residual_monotone_in_cycle(self):
        A = dominant(60, 4)
        _, rep = gmres(A, np.ones(60), restart=60)
        h = np.asarray(rep.history)
        assert len(h) > 1 and np.all(np.diff(h) <= 1e-14)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            gmres(np.ones((2, 3)), np.ones(2))
        with pytest.raises(ValueError):
            gmres(np.eye(2), [1.0, np.nan])

    def test_ilu0_reduces_iterations_on_aesfem(self):
        mesh = generate_box_mesh(2, 16, perturb=0.2, seed=0)
        system = assemble_aesfem(mesh, None, constant_pde(2), 2)
        _, plain = gmres(system.A, system.b)
        _, pre = gmres(system.A, system.b, precond="ilu0")
        assert pre.converged and pre.iterations < plain.iterations


class TestCg:
    def test_diagonal(self):
        x, rep = cg(sp.diags([1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])
        np.testing.assert_allclose(x, 1.0)
        assert rep.converged

    def test_finite_termination(self):
        A = poisson_1d(31) * 32
        _, rep = cg(A, np.ones(31))
        assert rep.converged and rep.iterations <= 31 and rep.final_relative_residual <= 1e-12

    def test_indefinite_is_failure(self):
        x, rep = cg(sp.diags([1.0, -1.0]), [1.0, 1.0])
        assert not rep.converged

    @pytest.mark.parametrize("precond", ["none", "jacobi", "ic0", "gauss_seidel"])
    def test_agrees_with_gmres(self, precond):
        A = dominant(40, 5, symmetric=True)
        b = np.random.default_rng(6).normal(size=40)
        tol = 1e-12
        xc, rc = cg(A, b, precond=precond, tol=tol)
        xg, rg = gmres(A, b, tol=tol)
        assert rc.converged and rg.converged
        xs = np.linalg.solve(A, b)
        np.testing.assert_allclose(xc, xg, atol=10 * tol * np.linalg.cond(A) * np.abs(xs).max())

    def test_distortion_increases_p1_iterations(self):
        base = generate_box_mesh(2, 16)
        bad = distort_mesh(base, [100, 250, 300, 400], 1e-3, vertex="deepest")
        iters = []
        for m in (base, bad):
            s = assemble_fem_p1(m, constant_pde(2))
            iters.append(cg(s.A, s.b, tol=1e-8)[1].iterations)
        assert iters[1] > iters[0]


class TestFactorizations:
    def test_diagonal_exact(self):
        d = np.array([2.0, 3.0, 5.0])
        A = sp.diags(d, format="csr")
        np.testing.assert_allclose(ilu0(A).apply(np.ones(3)), 1 / d)
        np.testing.assert_allclose(ic0(A).apply(np.ones(3)), 1 / d)
        L, U = ilu0(A).factors()
        np.testing.assert_allclose((L @ U).toarray(), A.toarray())

    def test_tridiagonal_ic0_is_cholesky(self):
        A = poisson_1d(20)
        L = ic0(A).factor()
        assert abs(L @ L.T - A).max() <= 1e-13

    def test_tridiagonal_ilu0_is_lu(self):
        A = poisson_1d(20) + sp.diags(np.linspace(0, 1, 19), 1)
        L, U = ilu0(A).factors()
        assert abs(L @ U - A).max() <= 1e-13

    def test_pattern_is_kept(self):
        A = as_csr(dominant(30, 7))
        L, U = ilu0(A).factors()
        pattern = set(zip(*A.nonzero()))
        assert set(zip(*(L - sp.identity(30)).nonzero())) <= pattern
        assert set(zip(*U.nonzero())) <= pattern

    def test_zero_pivot_names_row(self):
        A = sp.csr_matrix(np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]]))
        with pytest.raises(FactorizationError) as info:
            ilu0(A)
        assert info.value.row == 1

    def test_nonpositive_pivot_ic0(self):
        A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(FactorizationError) as info:
            ic0(A)
        assert info.value.row == 1

    def test_missing_diagonal(self):
        with pytest.raises(FactorizationError):
            ilu0(sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 1.0]])))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            make_preconditioner(sp.identity(2), "amg")


class TestConditionEstimate:
    def test_examples(self):
        assert condition_estimate(sp.identity(10)) == pytest.approx(1.0)
        assert condition_estimate(sp.diags([1.0, 10.0])) == pytest.approx(10.0, rel=1e-12)
        A = as_csr(dominant(30, 8))
        assert condition_estimate(7 * A) == pytest.approx(condition_estimate(A), rel=1e-10)

    @given(seed=st.integers(0, 10_000), n=st.integers(2, 50), with_solve=st.booleans())
    def test_lower_bound(self, seed, n, with_solve):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(n, n)) + n * np.eye(n) * rng.uniform(0, 1)
        kappa = np.linalg.cond(A)
        if not np.isfinite(kappa) or kappa > 1e12:
            return
        S = as_csr(A)
        est = condition_estimate(S, splu_solver(S) if with_solve else None)
        assert est <= kappa * (1 + 1e-8)

    def test_tight_with_solves(self):
        A = as_csr(dominant(200, 9))
        est = condition_estimate(A, splu_solver(A), krylov_dim=60)
        assert est == pytest.approx(np.linalg.cond(A.toarray()), rel=1e-6)

    def test_deterministic(self):
        A = as_csr(dominant(100, 10))
        assert condition_estimate(A, krylov_dim=10) == condition_estimate(A, krylov_dim=10)
