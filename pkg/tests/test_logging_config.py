# tests/test_logging_config.py

import logging
import os
import tempfile
import unittest

from src.panel_trend.core.logging_config import configure_logging


class TestConfigureLogging(unittest.TestCase):

    def setUp(self):
        self.root = logging.getLogger()
        self.saved_handlers = list(self.root.handlers)
        self.saved_level = self.root.level
        self.test_dir = tempfile.TemporaryDirectory()

    def tearDown(self):
        for handler in list(self.root.handlers):
            self.root.removeHandler(handler)
            handler.close()
        for handler in self.saved_handlers:
            self.root.addHandler(handler)
        self.root.setLevel(self.saved_level)
        self.test_dir.cleanup()

    def test_file_lines_carry_command(self):
        path = configure_logging(log_dir=self.test_dir.name, command="rolling", log_level="INFO")
        self.assertEqual(path, os.path.join(self.test_dir.name, "panel_trend.log"))
        logging.getLogger("src.panel_trend.test").info("window done")
        for handler in self.root.handlers:
            handler.flush()
        with open(path, encoding="utf-8") as f:
            lines = [line for line in f if "window done" in line]
        self.assertEqual(len(lines), 1)
        self.assertIn("| rolling  |", lines[0])
        self.assertIn("| INFO     |", lines[0])

    def test_console_only(self):
        path = configure_logging(log_file=None, log_dir=self.test_dir.name)
        self.assertIsNone(path)
        self.assertEqual(len(self.root.handlers), 1)
        self.assertEqual(os.listdir(self.test_dir.name), [])

    def test_reconfiguring_replaces_handlers(self):
        configure_logging(log_dir=self.test_dir.name)
        configure_logging(log_dir=self.test_dir.name, log_level="WARNING")
        self.assertEqual(len(self.root.handlers), 2)
        self.assertEqual(self.root.level, logging.WARNING)


if __name__ == "__main__":
    unittest.main()
