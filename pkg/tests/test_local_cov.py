# tests/test_local_cov.py

import unittest

import numpy as np
import pandas as pd

from src.panel_trend.core.exceptions import EmptyWindowError, PanelValidationError
from src.panel_trend.data.panel import Panel
from src.panel_trend.estimation.kernels import Boundary, KernelSpec, kernel_weight
from src.panel_trend.estimation.local_cov import sigma, sigma_loo


def make_panel(values, starts=None):
    values = np.asarray(values, dtype=float)
    n_units, n_periods = values.shape
    return Panel(
        values=values,
        starts=starts if starts is not None else [1] * n_units,
        unit_ids=[f"U{i}" for i in range(n_units)],
        time_labels=pd.date_range("2020-03-01", periods=n_periods, freq="D"),
    )


class TestSigma(unittest.TestCase):

    def setUp(self):
        self.small = make_panel([[1.0, 2.0], [0.0, 0.0]])
        self.spec = KernelSpec(h=1.0)

    def test_hand_computed_entry(self):
        result = sigma(self.small, self.spec, 1.0)
        self.assertAlmostEqual(result.matrix[0, 0], 1.78125, places=14)
        self.assertEqual(result.matrix[0, 1], 0.0)
        self.assertEqual(result.matrix[1, 1], 0.0)
        self.assertAlmostEqual(result.effective_weight, 2.625, places=14)

    def test_symmetric_and_psd(self):
        rng = np.random.default_rng(11)
        panel = make_panel(rng.normal(size=(6, 40)))
        for u in (0.1, 0.5, 0.97, 1.0):
            matrix = sigma(panel, KernelSpec(h=0.15), u).matrix
            np.testing.assert_array_equal(matrix, matrix.T)
            self.assertGreaterEqual(np.linalg.eigvalsh(matrix).min(), -1e-12)

    def test_matches_direct_sum(self):
        rng = np.random.default_rng(5)
        panel = make_panel(rng.normal(size=(4, 25)))
        spec = KernelSpec(h=0.3)
        u = 0.8
        weights = kernel_weight(spec, panel.tau, u)
        expected = sum(w * np.outer(y, y) for w, y in zip(weights, panel.values.T)) / (4 * 25)
        np.testing.assert_allclose(sigma(panel, spec, u).matrix, expected, rtol=1e-12, atol=1e-14)

    def test_u_outside_unit_interval(self):
        for u in (0.0, -0.2, 1.01):
            with self.assertRaises(PanelValidationError):
                sigma(self.small, self.spec, u)

    def test_deterministic_bytes(self):
        rng = np.random.default_rng(2)
        panel = make_panel(rng.normal(size=(8, 60)))
        first = sigma(panel, KernelSpec(h=0.2), 0.6).matrix
        second = sigma(panel, KernelSpec(h=0.2), 0.6).matrix
        self.assertEqual(first.tobytes(), second.tobytes())

    def test_unit_permutation_permutes_matrix(self):
        rng = np.random.default_rng(13)
        values = rng.normal(size=(6, 50))
        order = [4, 0, 5, 2, 1, 3]
        spec = KernelSpec(h=0.2)
        for u in (0.3, 0.9):
            base = sigma(make_panel(values), spec, u).matrix
            permuted = sigma(make_panel(values[order]), spec, u).matrix
            np.testing.assert_allclose(permuted, base[np.ix_(order, order)], rtol=1e-13, atol=1e-15)

    def test_lipschitz_in_u(self):
        rng = np.random.default_rng(17)
        panel = make_panel(rng.normal(size=(4, 80)))
        h = 0.2
        spec = KernelSpec(h=h, boundary=Boundary.NONE)
        # |K'| <= 1.5 on the real line, so |d K_h / du| <= 1.5 / h^2.
        abs_y = np.abs(panel.values)
        bound = 1.5 / h**2 * (abs_y @ abs_y.T) / (4 * 80)
        for u in np.linspace(0.05, 0.95, 19):
            for step in (1e-3, 1e-2, 4e-2):
                with self.subTest(u=float(u), step=step):
                    diff = np.abs(sigma(panel, spec, u + step).matrix - sigma(panel, spec, u).matrix)
                    self.assertTrue(np.all(diff <= bound * step + 1e-12))

    def test_psd_over_random_unbalanced_panels(self):
        rng = np.random.default_rng(29)
        for trial in range(100):
            n_units = int(rng.integers(2, 9))
            n_periods = int(rng.integers(20, 80))
            starts = [int(s) for s in rng.integers(1, n_periods // 2, size=n_units)]
            values = rng.normal(size=(n_units, n_periods)) * rng.uniform(0.1, 50.0)
            for i, start in enumerate(starts):
                values[i, : start - 1] = 0.0
            panel = make_panel(values, starts=starts)
            h = float(rng.uniform(0.1, 1.0))
            u = float(rng.uniform(0.3, 1.0))
            with self.subTest(trial=trial):
                eigenvalues = np.linalg.eigvalsh(sigma(panel, KernelSpec(h=h), u).matrix)
                self.assertGreaterEqual(eigenvalues.min(), -1e-12 * max(eigenvalues.max(), 1.0))


class TestSigmaLeaveOneOut(unittest.TestCase):

    def test_hand_computed_entry(self):
        panel = make_panel([[1.0, 2.0], [0.0, 0.0]])
        result = sigma_loo(panel, KernelSpec(h=1.0), 2)
        self.assertAlmostEqual(result.matrix[0, 0], 0.28125, places=14)
        self.assertEqual(result.u, 1.0)

    def test_difference_is_the_dropped_term(self):
        rng = np.random.default_rng(8)
        panel = make_panel(rng.normal(size=(5, 30)))
        spec = KernelSpec(h=0.25)
        for t in (3, 17, 30):
            with self.subTest(t=t):
                tau_t = panel.grid.at(t)
                y_t = panel.values[:, t - 1]
                expected = np.outer(y_t, y_t) * kernel_weight(spec, tau_t, tau_t) / (5 * 30)
                diff = sigma(panel, spec, tau_t).matrix - sigma_loo(panel, spec, t).matrix
                np.testing.assert_allclose(diff, expected, rtol=1e-10, atol=1e-13)

    def test_precomputed_weights_are_not_mutated(self):
        rng = np.random.default_rng(4)
        panel = make_panel(rng.normal(size=(3, 20)))
        spec = KernelSpec(h=0.3)
        weights = kernel_weight(spec, panel.tau, panel.grid.at(10))
        snapshot = weights.copy()
        with_weights = sigma_loo(panel, spec, 10, weights=weights).matrix
        without = sigma_loo(panel, spec, 10).matrix
        np.testing.assert_array_equal(weights, snapshot)
        np.testing.assert_array_equal(with_weights, without)

    def test_empty_window(self):
        panel = make_panel(np.ones((2, 10)))
        with self.assertRaises(EmptyWindowError):
            sigma_loo(panel, KernelSpec(h=0.05), 5)

    def test_t_out_range(self):
        panel = make_panel(np.ones((2, 10)))
        for t in (0, 11):
            with self.assertRaises(PanelValidationError):
                sigma_loo(panel, KernelSpec(h=0.2), t)


if __name__ == "__main__":
    unittest.main()
