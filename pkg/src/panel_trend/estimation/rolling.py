import logging
import math
from enum import Enum
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel

import src.panel_trend.core.config as config
from src.panel_trend.core.exceptions import EstimationError, PanelValidationError
from src.panel_trend.data.panel import EvalRule, EvaluationSet, Panel
from src.panel_trend.estimation.bandwidth import select_bandwidth
from src.panel_trend.estimation.estimators import a_hat, lambda_curve, r_series
from src.panel_trend.estimation.kernels import KernelSpec
from src.panel_trend.utils import ordered_map

logger = logging.getLogger(__name__)


class BandwidthPolicy(str, Enum):
    FIXED_H = "fixed_h"
    PER_WINDOW_CV = "per_window_cv"


class RollingRow(BaseModel):
    end_date: str
    first_t: int
    last_t: int
    h: Optional[float] = None
    a_hat: Optional[float] = None
    r_bar: Optional[float] = None
    status: str = "ok"


def _window_row(panel: Panel, first: int, window: int, spec: KernelSpec, policy: BandwidthPolicy, tail: int) -> RollingRow:
    last = first + window - 1
    row = {"end_date": panel.time_labels[last - 1].strftime("%Y-%m-%d"), "first_t": first, "last_t": last}
    sub = panel.window(first, last)
    c_set = EvaluationSet(indices=tuple(range(window - tail + 1, window + 1)), rule=EvalRule.EXPLICIT)

    try:
        if policy is BandwidthPolicy.PER_WINDOW_CV:
            spec = spec.with_bandwidth(select_bandwidth(sub, c_set, boundary=spec.boundary, max_workers=1).h_hat)
        curve = lambda_curve(sub, spec, c_set, max_workers=1)
    except EstimationError as e:
        logger.warning(f"Window ending {row['end_date']} failed: {e}")
        return RollingRow(**row, h=spec.h, status=f"error: {e}")

    ratios = r_series(curve)
    r_bar = math.nan
    if all(r.defined for r in ratios):
        r_bar = float(np.mean([r.ratio for r in ratios]))
    try:
        estimate = a_hat(curve, window)
    except EstimationError:
        estimate = math.nan

    status = "ok" if math.isfinite(r_bar) and math.isfinite(estimate) else "degenerate"
    return RollingRow(
        **row,
        h=spec.h,
        a_hat=estimate if math.isfinite(estimate) else None,
        r_bar=r_bar if math.isfinite(r_bar) else None,
        status=status,
    )


def rolling_windows(
    panel: Panel,
    spec: KernelSpec,
    window: int = config.ROLLING_WINDOW,
    policy: Union[BandwidthPolicy, str] = BandwidthPolicy.FIXED_H,
    tail: int = config.ROLLING_TAIL,
    max_workers: Optional[int] = None,
) -> List[RollingRow]:
    """
    Re-estimates (a_hat, R_bar) on every window of `window` consecutive days.

    Windows slide one day at a time. Inside each, T = window and C is the last `tail`
    indices; R_bar is the mean of the tail - 1 consecutive ratios. Windows whose
    spectrum degenerates or whose estimation fails keep a row with a status instead of
    stopping the run.

    Args:
        panel: full panel (already trimmed).
        spec: kernel; under fixed_h its bandwidth is reused for every window.
        window: window length in days.
        policy: fixed_h or per_window_cv.
        tail: size of the evaluation set at the end of each window.

    Returns:
        One RollingRow per window, ordered by end date.
    """
    policy = BandwidthPolicy(policy)
    if window > panel.n_periods:
        logger.error(f"Window {window} is longer than the panel (T={panel.n_periods}).")
        raise PanelValidationError(f"fewer than one full window (window={window}, T={panel.n_periods})")
    if not 2 <= tail <= window:
        raise PanelValidationError(f"Evaluation tail must lie in 2..{window}, got {tail}.")

    firsts = range(1, panel.n_periods - window + 2)
    rows = ordered_map(lambda first: _window_row(panel, first, window, spec, policy, tail), firsts, max_workers)
    flagged = sum(row.status != "ok" for row in rows)
    if flagged:
        logger.warning(f"{flagged} of {len(rows)} window(s) flagged.")
    logger.info(f"Rolling estimation over {len(rows)} windows of {window} days ({policy.value}).")
    return rows
