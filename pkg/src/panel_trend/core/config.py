"""Centralized configuration for the panel trend estimator."""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent.parent.parent

DATA_DIR = BASE_DIR / "data"
RAW_DATA_DIR = DATA_DIR / "raw"
OUTPUT_DIR = Path(os.getenv("PANEL_TREND_OUTPUT_DIR", str(BASE_DIR / "outputs")))
LOG_DIR = os.getenv("PANEL_TREND_LOG_DIR", "logs")

RAW_FEED_PATH = RAW_DATA_DIR / "ecdc_cases.csv"
CANONICAL_FEED_PATH = RAW_DATA_DIR / "feed_canonical.csv"

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

# Data preparation
DEFAULT_TRIM_DAYS = 30
ROLLING_TRIM_DAYS = 40
DEFAULT_DEATH_THRESHOLD = 20
# Archived feed snapshot; the CLI defaults to the last feed date.
SNAPSHOT_CUTOFF_DATE = "2020-05-31"

# Kernel / bandwidth selection
CV_GRID_SIZE = int(os.getenv("CV_GRID_SIZE", "20"))
CV_GRID_UPPER = 0.5
CV_GRID_FLOOR = 0.05
CV_MIN_WINDOW_POINTS = 4
BANDWIDTH_LEFT_FACTOR = 0.8
BANDWIDTH_RIGHT_FACTOR = 1.2

# Spectral
EIGEN_TOL = 1e-12
EIGEN_MAX_ITER = 10000
EIGEN_RESIDUAL_TOL = 1e-10
ORACLE_MAX_DIM = 64
SIGN_ZERO_TOL = 1e-12
Q_REFERENCE_TOL = 1e-12

# Rolling windows
ROLLING_WINDOW = 30
ROLLING_TAIL = 5

# Synthetic panels
SYNTHETIC_START_DATE = "2020-01-01"

MAX_WORKERS = int(os.getenv("PANEL_TREND_MAX_WORKERS", "1"))

APP_VERSION = "0.1.0"

# Output files
A_HAT_FILE = "a_hat.csv"
R_SERIES_FILE = "r_series.csv"
Q_SERIES_FILE = "q_series.csv"
REPORT_FILE = "report.json"
ROLLING_FILE = "rolling.csv"
SYNTHETIC_PANEL_FILE = "panel.csv"
TRUTH_FILE = "truth.json"
FLOAT_FORMAT = "%.17g"
