# tests/test_panel.py

import math
import unittest

import numpy as np
import pandas as pd

from src.panel_trend.core.exceptions import EmptyEvaluationSetError, MissingDensityError, PanelValidationError
from src.panel_trend.data.panel import (
    EvalRule,
    EvaluationSet,
    Panel,
    Region,
    Transform,
    UnitSeries,
    build_panel,
    eval_set,
    rescale,
)


def make_panel(values, starts, unit_ids=None):
    values = np.asarray(values, dtype=float)
    n_units, n_periods = values.shape
    return Panel(
        values=values,
        starts=starts,
        unit_ids=unit_ids or [f"U{i}" for i in range(n_units)],
        time_labels=pd.date_range("2020-03-01", periods=n_periods, freq="D"),
    )


def series(unit_id, first_day, counts):
    return UnitSeries(unit_id=unit_id, dates=pd.date_range(first_day, periods=len(counts), freq="D"), counts=counts)


class TestBuildPanel(unittest.TestCase):

    def setUp(self):
        self.series = [
            series("FRA", "2020-03-01", [0, 19, 5, 2]),
            series("DEU", "2020-03-03", [19, 3]),
        ]

    def test_case1_transform(self):
        panel = build_panel(self.series, Transform.CASE1)
        self.assertEqual(panel.values[0, 0], 0.0)
        self.assertAlmostEqual(panel.values[0, 1], math.log(20), places=12)
        self.assertAlmostEqual(panel.values[1, 2], math.log(20), places=12)

    def test_case2_transform(self):
        panel = build_panel(self.series, Transform.CASE2, densities={"FRA": 2.0, "DEU": 2.0})
        self.assertAlmostEqual(panel.values[0, 1], math.log(10), places=12)

    def test_case2_without_density_names_the_unit(self):
        with self.assertRaises(MissingDensityError) as cm:
            build_panel(self.series, Transform.CASE2, densities={"FRA": 2.0})
        self.assertEqual(cm.exception.unit_id, "DEU")

    def test_starts_and_zero_fill(self):
        panel = build_panel(self.series, Transform.CASE1)
        self.assertEqual(panel.n_periods, 4)
        np.testing.assert_array_equal(panel.starts, [1, 3])
        self.assertTrue(np.all(panel.values[~panel.active_mask()] == 0.0))

    def test_gap_inside_series_counts_as_zero(self):
        gappy = UnitSeries("ITA", pd.DatetimeIndex(["2020-03-01", "2020-03-04"]), [4.0, 9.0])
        panel = build_panel([gappy, self.series[0]], Transform.RAW)
        np.testing.assert_array_equal(panel.values[0], [4.0, 0.0, 0.0, 9.0])

    def test_non_finite_rows_rejected(self):
        bad = series("ESP", "2020-03-01", [1.0, float("nan"), 3.0, 4.0])
        panel = build_panel([bad, self.series[0]], Transform.RAW)
        self.assertEqual(panel.values[0, 1], 0.0)
        self.assertTrue(np.all(np.isfinite(panel.values)))

    def test_negative_counts_clamped(self):
        corrected = series("ESP", "2020-03-01", [5, -3, 2, 1])
        panel = build_panel([corrected, self.series[0]], Transform.CASE1)
        self.assertEqual(panel.values[0, 1], 0.0)

    def test_deterministic(self):
        first = build_panel(self.series, Transform.CASE1)
        second = build_panel(self.series, Transform.CASE1)
        self.assertEqual(first.values.tobytes(), second.values.tobytes())

    def test_region_is_carried(self):
        panel = build_panel(self.series, region="EU")
        self.assertIs(panel.region, Region.EU)


class TestPanelInvariants(unittest.TestCase):

    def test_rejects_single_unit(self):
        with self.assertRaises(PanelValidationError):
            make_panel([[1.0, 2.0]], [1])

    def test_rejects_duplicate_ids(self):
        with self.assertRaises(PanelValidationError):
            make_panel([[1.0, 2.0], [1.0, 2.0]], [1, 1], unit_ids=["A", "A"])

    def test_rejects_value_before_start(self):
        with self.assertRaises(PanelValidationError):
            make_panel([[1.0, 2.0], [1.0, 2.0]], [1, 2])

    def test_rejects_start_out_of_range(self):
        with self.assertRaises(PanelValidationError):
            make_panel([[1.0, 2.0], [1.0, 2.0]], [1, 3])

    def test_values_are_read_only(self):
        panel = make_panel([[1.0, 2.0], [3.0, 4.0]], [1, 1])
        with self.assertRaises(ValueError):
            panel.values[0, 0] = 5.0

    def test_time_grid(self):
        panel = make_panel(np.ones((2, 4)), [1, 1])
        np.testing.assert_allclose(panel.tau, [0.25, 0.5, 0.75, 1.0])
        self.assertEqual(panel.grid.at(4), 1.0)

    def test_window_rebases_starts(self):
        values = np.array([[1.0, 2, 3, 4, 5, 6], [0, 0, 0, 0, 1, 2]])
        panel = make_panel(values, [1, 5])
        sub = panel.window(2, 5)
        self.assertEqual(sub.n_periods, 4)
        np.testing.assert_array_equal(sub.starts, [1, 4])
        np.testing.assert_array_equal(sub.values[0], [2, 3, 4, 5])

    def test_to_frame_lists_active_entries(self):
        panel = make_panel([[1.0, 2.0, 3.0], [0.0, 5.0, 6.0]], [1, 2])
        frame = panel.to_frame()
        self.assertEqual(len(frame), 5)
        self.assertEqual(list(frame.columns), ["date", "country_code", "region", "value"])


class TestEvalSet(unittest.TestCase):

    def test_quarter_trim(self):
        panel = make_panel(np.ones((2, 98)), [1, 1])
        c_set = eval_set(panel, EvalRule.QUARTER_TRIM)
        self.assertEqual(c_set.indices[0], 25)
        self.assertEqual(c_set.indices[-1], 98)
        self.assertEqual(len(c_set), 74)

    def test_quarter_trim_size(self):
        for n_periods in range(4, 60):
            panel = make_panel(np.ones((2, n_periods)), [1, 1])
            self.assertEqual(len(eval_set(panel)), n_periods - n_periods // 4)

    def test_explicit_clips_to_one(self):
        panel = make_panel(np.ones((2, 30)), [1, 1])
        c_set = eval_set(panel, EvalRule.EXPLICIT, margin=4)
        self.assertEqual(c_set.indices, tuple(range(1, 31)))

    def test_explicit_needs_margin(self):
        panel = make_panel(np.ones((2, 30)), [1, 1])
        with self.assertRaises(PanelValidationError):
            eval_set(panel, EvalRule.EXPLICIT)

    def test_log_n_count(self):
        n_units, n_periods = 48, 62
        starts = np.ones(n_units, dtype=int)
        starts[-5:] = 10
        values = np.ones((n_units, n_periods))
        values[-5:, :9] = 0.0
        panel = make_panel(values, starts)
        c_set = eval_set(panel, EvalRule.LOG_N_COUNT)
        self.assertEqual(c_set.indices, tuple(range(10, 63)))

    def test_empty_set_rejected(self):
        with self.assertRaises(EmptyEvaluationSetError) as cm:
            EvaluationSet(indices=(), rule=EvalRule.EXPLICIT)
        self.assertIn("evaluation set empty", str(cm.exception))

    def test_unsorted_set_rejected(self):
        with self.assertRaises(PanelValidationError):
            EvaluationSet(indices=(3, 2), rule=EvalRule.EXPLICIT)


class TestRescale(unittest.TestCase):

    def setUp(self):
        self.panel = make_panel([[0.0, 3.0], [1.0, 2.0]], [2, 1])

    def test_identity(self):
        np.testing.assert_array_equal(rescale(self.panel, 1.0).values, self.panel.values)

    def test_doubles_values(self):
        scaled = rescale(self.panel, 2.0)
        self.assertEqual(scaled.values[0, 1], 6.0)
        np.testing.assert_array_equal(scaled.starts, self.panel.starts)

    def test_rejects_non_positive(self):
        with self.assertRaises(PanelValidationError):
            rescale(self.panel, 0.0)


if __name__ == "__main__":
    unittest.main()
