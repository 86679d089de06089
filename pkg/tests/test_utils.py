# tests/test_utils.py

import math
import os
import tempfile
import time
import unittest
from unittest.mock import patch

from src.panel_trend.utils import json_safe, ordered_map, write_outputs


class TestWriteOutputs(unittest.TestCase):

    def setUp(self):
        self.test_dir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.test_dir.cleanup()

    def test_writes_all_files(self):
        paths = {os.path.join(self.test_dir.name, "out", name): name for name in ("a.csv", "b.json")}
        written = write_outputs(paths)
        self.assertEqual(sorted(written), sorted(paths))
        for path, text in paths.items():
            with open(path, encoding="utf-8") as f:
                self.assertEqual(f.read(), text)

    def test_failed_staging_leaves_nothing(self):
        out = os.path.join(self.test_dir.name, "out")
        paths = {os.path.join(out, "a.csv"): "a", os.path.join(out, "b.csv"): "b"}
        real_fdopen = os.fdopen
        calls = []

        def failing_fdopen(*args, **kwargs):
            calls.append(1)
            if len(calls) == 2:
                raise OSError("disk full")
            return real_fdopen(*args, **kwargs)

        with patch("src.panel_trend.utils.os.fdopen", side_effect=failing_fdopen):
            with self.assertRaises(OSError):
                write_outputs(paths)
        self.assertEqual(os.listdir(out), [])


class TestOrderedMap(unittest.TestCase):

    def test_keeps_input_order_on_threads(self):
        def slow_square(x):
            time.sleep(0.01 * (5 - x))
            return x * x

        self.assertEqual(ordered_map(slow_square, range(5), max_workers=4), [0, 1, 4, 9, 16])

    def test_serial_path(self):
        self.assertEqual(ordered_map(str, [3, 1], max_workers=1), ["3", "1"])


class TestJsonSafe(unittest.TestCase):

    def test_non_finite_floats_become_none(self):
        payload = {"a": math.nan, "b": [1.0, math.inf, (2, -math.inf)], "c": "x"}
        self.assertEqual(json_safe(payload), {"a": None, "b": [1.0, None, [2, None]], "c": "x"})


if __name__ == "__main__":
    unittest.main()
