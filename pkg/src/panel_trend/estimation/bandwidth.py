import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

import src.panel_trend.core.config as config
from src.panel_trend.core.exceptions import (
    DegenerateSpectrumError,
    EmptyWindowError,
    NoFeasibleBandwidthError,
    PanelValidationError,
)
from src.panel_trend.data.panel import EvaluationSet, Panel
from src.panel_trend.estimation.estimators import a_hat, lambda_curve
from src.panel_trend.estimation.kernels import Boundary, KernelSpec, kernel_weight
from src.panel_trend.estimation.local_cov import sigma_loo
from src.panel_trend.estimation.spectral import top_eigenpair
from src.panel_trend.utils import ordered_map

logger = logging.getLogger(__name__)


class CvResult(BaseModel):
    h_hat: float
    h_grid: List[float]
    cv_values: List[float]
    a_per_h: List[Optional[float]]
    h_l: float = Field(..., description="0.8 * h_hat")
    h_r: float = Field(..., description="1.2 * h_hat")


def default_grid(n_periods: int, size: int = config.CV_GRID_SIZE) -> np.ndarray:
    """Equally spaced candidates on [max(4/T, 0.05), 0.5]."""
    lower = max(config.CV_MIN_WINDOW_POINTS / n_periods, config.CV_GRID_FLOOR)
    if lower >= config.CV_GRID_UPPER:
        logger.warning(f"T={n_periods} is too short for a bandwidth grid; using the single candidate {min(lower, 1.0)}.")
        return np.array([min(lower, 1.0)])
    return np.linspace(lower, config.CV_GRID_UPPER, size)


def _cv_evaluate(
    panel: Panel,
    spec: KernelSpec,
    c_set: EvaluationSet,
) -> Tuple[float, Optional[float]]:
    """Returns (CV score, a_h); an empty window or degenerate spectrum scores +inf."""
    try:
        a_h = a_hat(lambda_curve(panel, spec, c_set, max_workers=1), panel.n_periods)
    except (EmptyWindowError, DegenerateSpectrumError) as e:
        logger.warning(f"h={spec.h:.6f} excluded from CV: {e}")
        return math.inf, None

    scale = math.sqrt(panel.n_units) * panel.n_periods**a_h
    score = 0.0
    for t in c_set:
        weights = kernel_weight(spec, panel.tau, panel.grid.at(t))
        try:
            loadings = top_eigenpair(sigma_loo(panel, spec, t, weights=weights).matrix).vector
        except EmptyWindowError as e:
            logger.warning(f"h={spec.h:.6f} excluded from CV at t={t}: {e}")
            return math.inf, a_h
        y = panel.values[:, t - 1]
        if loadings @ y < 0:
            loadings = -loadings
        residual = y / scale - loadings
        score += float(residual @ residual)
    return score, a_h


def cv_score(
    panel: Panel,
    h: float,
    c_set: EvaluationSet,
    boundary: Boundary = Boundary.RIGHT_ADJUSTED,
) -> float:
    """
    Leave-one-out criterion CV(h) = sum_t || Y_t / (sqrt(N) T^{a_h}) - l_{-t} ||^2 over t in C.

    a_h is the trend exponent estimated on the full sample at bandwidth h. Each
    leave-one-out loading vector is oriented to have a nonnegative inner product with Y_t
    before the residual is formed.

    Returns:
        float: the score, or +inf when some window has no kernel mass.
    """
    score, _ = _cv_evaluate(panel, KernelSpec(h=h, boundary=boundary), c_set)
    return score


def select_bandwidth(
    panel: Panel,
    c_set: EvaluationSet,
    grid: Optional[Sequence[float]] = None,
    boundary: Boundary = Boundary.RIGHT_ADJUSTED,
    max_workers: Optional[int] = None,
) -> CvResult:
    """
    Picks h minimizing CV(h) over the candidate grid; ties go to the smaller h.

    Args:
        panel: the panel.
        c_set: evaluation set used for both a_h and the CV sum.
        grid: candidate bandwidths; defaults to default_grid(T).
        boundary: kernel boundary rule.
        max_workers: candidates evaluated in parallel when > 1.

    Returns:
        CvResult: every score and per-candidate a_h, plus h_l = 0.8 h_hat and h_r = 1.2 h_hat.

    Raises:
        NoFeasibleBandwidthError: if no candidate has a finite score.
    """
    candidates = default_grid(panel.n_periods) if grid is None else np.asarray(grid, dtype=float)
    if candidates.size == 0:
        raise PanelValidationError("Bandwidth grid is empty.")
    candidates = np.unique(candidates)
    if candidates[0] <= 0 or candidates[-1] > 1:
        raise PanelValidationError("Bandwidth candidates must lie in (0, 1].")

    specs = [KernelSpec(h=float(h), boundary=boundary) for h in candidates]
    results = ordered_map(lambda spec: _cv_evaluate(panel, spec, c_set), specs, max_workers)
    scores = np.array([score for score, _ in results])

    finite = np.isfinite(scores)
    if not finite.any():
        logger.error(f"All {candidates.size} bandwidth candidates have infinite CV scores.")
        raise NoFeasibleBandwidthError("no feasible bandwidth")
    best = int(np.argmin(np.where(finite, scores, np.inf)))
    h_hat = float(candidates[best])

    logger.info(f"Selected h={h_hat:.6f} (CV={scores[best]:.6g}) from {candidates.size} candidates.")
    return CvResult(
        h_hat=h_hat,
        h_grid=[float(h) for h in candidates],
        cv_values=[float(s) for s in scores],
        a_per_h=[a for _, a in results],
        h_l=config.BANDWIDTH_LEFT_FACTOR * h_hat,
        h_r=config.BANDWIDTH_RIGHT_FACTOR * h_hat,
    )


class PeakCvResult(BaseModel):
    h_hat: float
    h_grid: List[float]
    cv_values: List[float]


def peak_grid(n_periods: int, size: int = config.CV_GRID_SIZE) -> np.ndarray:
    """Equally spaced candidates on [4/T, 0.5] for the peak smoother."""
    lower = config.CV_MIN_WINDOW_POINTS / n_periods
    if lower >= config.CV_GRID_UPPER:
        return np.array([min(lower, 1.0)])
    return np.linspace(lower, config.CV_GRID_UPPER, size)


def smoother_cv_score(panel: Panel, spec: KernelSpec) -> float:
    """
    Pooled leave-one-out squared error of the local-constant smoother.

    Every active entry y_it is predicted from the unit's other active entries; the
    boundary divisor scales a whole row and cancels in the ratio.

    Returns:
        float: the score, or +inf when some entry has no neighbours inside the window.
    """
    tau = panel.tau
    score = 0.0
    for i in range(panel.n_units):
        start = int(panel.starts[i])
        active_tau = tau[start - 1 :]
        y = panel.values[i, start - 1 :]
        weights = np.vstack([kernel_weight(spec, active_tau, float(u)) for u in active_tau])
        np.fill_diagonal(weights, 0.0)
        mass = weights.sum(axis=1)
        if np.any(mass <= 0):
            logger.warning(f"h={spec.h:.6f} excluded from smoother CV: unit '{panel.unit_ids[i]}' has isolated points.")
            return math.inf
        fitted = weights @ y / mass
        score += float(np.sum((y - fitted) ** 2))
    return score


def select_peak_bandwidth(
    panel: Panel,
    grid: Optional[Sequence[float]] = None,
    max_workers: Optional[int] = None,
) -> PeakCvResult:
    """
    Picks the peak-smoother bandwidth by leave-one-out CV; ties go to the smaller h.

    Raises:
        NoFeasibleBandwidthError: if no candidate has a finite score.
    """
    candidates = peak_grid(panel.n_periods) if grid is None else np.asarray(grid, dtype=float)
    if candidates.size == 0:
        raise PanelValidationError("Bandwidth grid is empty.")
    candidates = np.unique(candidates)
    if candidates[0] <= 0 or candidates[-1] > 1:
        raise PanelValidationError("Bandwidth candidates must lie in (0, 1].")

    specs = [KernelSpec(h=float(h)) for h in candidates]
    scores = np.array(ordered_map(lambda spec: smoother_cv_score(panel, spec), specs, max_workers))
    finite = np.isfinite(scores)
    if not finite.any():
        logger.error(f"All {candidates.size} peak-smoother candidates have infinite CV scores.")
        raise NoFeasibleBandwidthError("no feasible bandwidth")
    best = int(np.argmin(np.where(finite, scores, np.inf)))

    logger.info(f"Selected peak-smoother h={candidates[best]:.6f} from {candidates.size} candidates.")
    return PeakCvResult(
        h_hat=float(candidates[best]),
        h_grid=[float(h) for h in candidates],
        cv_values=[float(s) for s in scores],
    )
