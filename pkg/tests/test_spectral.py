# tests/test_spectral.py

import math
import unittest

import numpy as np

from src.panel_trend.core.exceptions import AsymmetricMatrixError, NonConvergenceError, OracleError
from src.panel_trend.estimation.spectral import (
    full_spectrum_oracle,
    jacobi_eigh,
    oracle_top_eigenpair,
    orient,
    top_eigenpair,
)


def random_psd(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3 * n))
    m = x @ x.T / (3 * n)
    return (m + m.T) / 2


class TestTopEigenpair(unittest.TestCase):

    def test_diagonal(self):
        pair = top_eigenpair(np.diag([2.0, 1.0]))
        self.assertAlmostEqual(pair.eigenvalue, 2.0, places=12)
        np.testing.assert_allclose(pair.vector, [1.0, 0.0], atol=1e-8)
        self.assertFalse(pair.degenerate)

    def test_rank_one(self):
        g = np.array([3.0, 4.0])
        pair = top_eigenpair(np.outer(g, g))
        self.assertAlmostEqual(pair.eigenvalue, 25.0, places=10)
        np.testing.assert_allclose(pair.vector, [0.6, 0.8], atol=1e-12)

    def test_start_vector_in_null_space(self):
        pair = top_eigenpair(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        self.assertAlmostEqual(pair.eigenvalue, 2.0, places=12)
        np.testing.assert_allclose(np.abs(pair.vector), [1 / math.sqrt(2)] * 2, atol=1e-12)
        self.assertGreater(pair.vector[int(np.argmax(np.abs(pair.vector)))], 0)

    def test_budget_exhausted(self):
        with self.assertRaises(NonConvergenceError) as cm:
            top_eigenpair(np.diag([1.0, 0.9]), max_iter=3)
        self.assertIsNotNone(cm.exception.best_vector)
        self.assertGreater(cm.exception.residual, 0)

    def test_nearly_tied_top_eigenvalues(self):
        pair = top_eigenpair(np.diag([1.0, 1.0 - 1e-9, 0.5]))
        self.assertAlmostEqual(pair.eigenvalue, 1.0, places=12)
        np.testing.assert_allclose(pair.vector, [1.0, 0.0, 0.0], atol=1e-8)

    def test_negative_dominant_eigenvalue(self):
        pair = top_eigenpair(np.diag([-5.0, 1.0]))
        self.assertAlmostEqual(pair.eigenvalue, 1.0, places=12)
        np.testing.assert_allclose(pair.vector, [0.0, 1.0], atol=1e-8)

    def test_zero_matrix_is_degenerate(self):
        pair = top_eigenpair(np.zeros((3, 3)))
        self.assertTrue(pair.degenerate)
        self.assertEqual(pair.eigenvalue, 0.0)
        np.testing.assert_allclose(pair.vector, np.full(3, 1 / math.sqrt(3)))

    def test_asymmetric_rejected(self):
        with self.assertRaises(AsymmetricMatrixError):
            top_eigenpair(np.array([[1.0, 2.0], [0.0, 1.0]]))
        with self.assertRaises(AsymmetricMatrixError):
            top_eigenpair(np.ones((2, 3)))

    def test_agrees_with_jacobi_oracle(self):
        for n, seed in ((2, 1), (5, 2), (12, 3), (30, 4)):
            with self.subTest(n=n):
                m = random_psd(n, seed)
                pair = top_eigenpair(m)
                oracle = oracle_top_eigenpair(m)
                self.assertAlmostEqual(pair.eigenvalue, oracle.eigenvalue, delta=1e-10 * oracle.eigenvalue)
                np.testing.assert_allclose(pair.vector, oracle.vector, atol=1e-8)
                self.assertLessEqual(pair.residual, 1e-10 * max(pair.eigenvalue, 1.0))

    def test_sign_convention(self):
        for seed in range(5):
            pair = top_eigenpair(random_psd(6, seed))
            self.assertGreaterEqual(pair.vector.sum(), 0.0)
            self.assertAlmostEqual(float(np.linalg.norm(pair.vector)), 1.0, places=12)

    def test_deterministic(self):
        m = random_psd(9, 10)
        first, second = top_eigenpair(m), top_eigenpair(m)
        self.assertEqual(first.vector.tobytes(), second.vector.tobytes())
        self.assertEqual(first.iterations, second.iterations)

    def test_positive_scaling(self):
        matrix = random_psd(6, 31)
        base = top_eigenpair(matrix)
        for c in (2.0, 7.0, 1e4):
            with self.subTest(c=c):
                scaled = top_eigenpair(c * matrix)
                self.assertAlmostEqual(scaled.eigenvalue, c * base.eigenvalue, delta=1e-10 * c * base.eigenvalue)
                np.testing.assert_allclose(scaled.vector, base.vector, atol=1e-8)

    def test_eigenvalue_dominates_diagonal(self):
        for seed in range(20):
            matrix = random_psd(int(3 + seed % 6), 100 + seed)
            with self.subTest(seed=seed):
                pair = top_eigenpair(matrix)
                self.assertGreaterEqual(pair.eigenvalue, np.diag(matrix).max() - 1e-10 * pair.eigenvalue)


class TestOrient(unittest.TestCase):

    def test_negative_sum_flips(self):
        np.testing.assert_array_equal(orient(np.array([-0.6, -0.8])), [0.6, 0.8])

    def test_zero_sum_uses_largest_entry(self):
        np.testing.assert_array_equal(orient(np.array([0.5, -0.5 - 1e-13, 1e-13])), [-0.5, 0.5 + 1e-13, -1e-13])


class TestJacobiOracle(unittest.TestCase):

    def test_matches_dense_solver(self):
        m = random_psd(10, 7)
        np.testing.assert_allclose(full_spectrum_oracle(m), np.linalg.eigvalsh(m), rtol=1e-10, atol=1e-12)

    def test_vectors_are_orthonormal(self):
        values, vectors = jacobi_eigh(random_psd(7, 8))
        np.testing.assert_allclose(vectors.T @ vectors, np.eye(7), atol=1e-12)
        self.assertTrue(np.all(np.diff(values) >= 0))

    def test_desk_scale_only(self):
        with self.assertRaises(OracleError) as cm:
            full_spectrum_oracle(np.eye(65))
        self.assertIn("oracle is desk-scale only", str(cm.exception))
        with self.assertRaises(OracleError):
            oracle_top_eigenpair(np.eye(65))


if __name__ == "__main__":
    unittest.main()
