# tests/conftest.py
import logging

import pytest

import src.panel_trend.core.config as config


@pytest.fixture(autouse=True)
def caplog_for_tests(caplog):
    """
    Fixture to capture logs during tests and set a default logging level.
    Estimation modules log every bandwidth candidate, so only warnings are kept.
    """
    caplog.set_level(logging.WARNING)
    yield


@pytest.fixture(autouse=True)
def isolated_output_dirs(tmp_path, monkeypatch):
    """Keeps default output and log folders inside the test's temp directory."""
    monkeypatch.setattr(config, "OUTPUT_DIR", tmp_path / "outputs")
    monkeypatch.setattr(config, "LOG_DIR", str(tmp_path / "logs"))
    yield
