import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sptucker import (
    CoreTensor,
    InvalidArgumentError,
    NumericFailure,
    core_mode_product,
    solve_row_system,
    thin_qr,
)
from sptucker.oracle import densify, gauss_solve, naive_mode_product


class TestSolveRowSystem:
    def test_zero_system(self):
        np.testing.assert_array_equal(solve_row_system(np.zeros((2, 2)), [0, 0], 0.01), [0, 0])

    def test_identity(self):
        np.testing.assert_allclose(solve_row_system(np.eye(2), [1, 2], 1.0), [0.5, 1.0])

    def test_rank_one_against_elimination(self):
        B = np.array([[16.0, 20.0], [20.0, 25.0]])
        c = np.array([92.0, 115.0])
        x = solve_row_system(B, c, 0.01)
        np.testing.assert_allclose(x, gauss_solve(B + 0.01 * np.eye(2), c), rtol=0, atol=1e-10)
        assert np.abs(x @ (B + 0.01 * np.eye(2)) - c).max() <= 1e-10 * (1 + np.linalg.norm(c))

    def test_singular_without_ridge_fails(self):
        with pytest.raises(NumericFailure, match="row 7"):
            solve_row_system(np.zeros((2, 2)), [1.0, 1.0], 0.0, row=7)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(0, 8))
    def test_psd_plus_ridge_always_solves(self, seed, size, k):
        rng = np.random.default_rng(seed)
        D = rng.normal(size=(k, size))
        B = D.T @ D
        c = rng.normal(size=size)
        x = solve_row_system(B, c, 0.01)
        resid = x @ (B + 0.01 * np.eye(size)) - c
        assert np.abs(resid).max() <= 1e-8 * (1 + np.linalg.norm(c)) * (1 + np.abs(B).max())


class TestThinQR:
    def test_hand_example(self):
        Q, R = thin_qr([[3.0, 0.0], [4.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(Q, [[0.6, 0], [0.8, 0], [0, 1]], atol=1e-15)
        np.testing.assert_allclose(R, [[5, 0], [0, 1]], atol=1e-15)

    def test_orthonormal_input(self):
        A, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(10, 3)))
        A *= np.sign(np.diag(_))  # positive-diagonal representative
        Q, R = thin_qr(A)
        np.testing.assert_allclose(Q, A, atol=1e-10)
        np.testing.assert_allclose(R, np.eye(3), atol=1e-10)

    def test_random_residuals(self):
        A = np.random.default_rng(2).normal(size=(50, 5))
        Q, R = thin_qr(A)
        assert np.abs(Q.T @ Q - np.eye(5)).max() <= 1e-10
        assert np.abs(Q @ R - A).max() <= 1e-10 * np.abs(A).max()
        assert np.allclose(R, np.triu(R))
        assert np.all(np.diag(R) >= 0)

    def test_matches_lapack_up_to_signs(self):
        A = np.random.default_rng(3).normal(size=(20, 4))
        Q, R = thin_qr(A)
        Q2, R2 = np.linalg.qr(A)
        s = np.sign(np.diag(R2))
        np.testing.assert_allclose(R, R2 * s[:, None], atol=1e-12)
        np.testing.assert_allclose(Q, Q2 * s, atol=1e-12)

    def test_deterministic(self):
        A = np.random.default_rng(4).normal(size=(30, 4))
        Q1, R1 = thin_qr(A)
        Q2, R2 = thin_qr(A.copy())
        assert np.array_equal(Q1, Q2) and np.array_equal(R1, R2)

    def test_wide_matrix(self):
        with pytest.raises(InvalidArgumentError):
            thin_qr(np.ones((2, 3)))

    def test_rank_deficient_names_column(self):
        A = np.array([[1.0, 2.0, 0.0], [1.0, 2.0, 1.0], [0.0, 0.0, 1.0], [1.0, 2.0, 3.0]])
        with pytest.raises(NumericFailure, match="column 1"):
            thin_qr(A)


class TestCoreModeProduct:
    def test_diagonal_scaling(self):
        core = CoreTensor([[0, 0], [1, 1]], [1.0, 1.0], (2, 2))
        out = core_mode_product(core, [[5.0, 0.0], [0.0, 1.0]], 0)
        assert out.indices.tolist() == [[0, 0], [1, 1]]
        assert out.values.tolist() == [5.0, 1.0]

    def test_identity(self):
        core = CoreTensor.from_dense(np.random.default_rng(0).random((2, 3, 2)))
        out = core_mode_product(core, np.eye(3), 1)
        assert np.array_equal(out.indices, core.indices)
        assert np.array_equal(out.values, core.values)

    def test_matches_loop_product(self):
        rng = np.random.default_rng(5)
        dense = np.where(rng.random((3, 3, 3)) < 0.4, rng.normal(size=(3, 3, 3)), 0.0)
        dense[0, 0, 0] = 1.0
        core = CoreTensor.from_dense(dense, drop_below=0.0)
        M = rng.normal(size=(3, 3))
        out = core_mode_product(core, M, 1)
        np.testing.assert_allclose(densify(out), naive_mode_product(dense, M, 1), atol=1e-12)

    def test_composition(self):
        rng = np.random.default_rng(6)
        core = CoreTensor.from_dense(rng.normal(size=(2, 3, 4)))
        M1, M2 = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
        lhs = core_mode_product(core_mode_product(core, M1, 2), M2, 2)
        rhs = core_mode_product(core, M2 @ M1, 2)
        np.testing.assert_allclose(lhs.dense(), rhs.dense(), atol=1e-10)

    def test_shape_mismatch(self):
        core = CoreTensor([[0, 0]], [1.0], (2, 2))
        with pytest.raises(InvalidArgumentError):
            core_mode_product(core, np.eye(3), 0)
