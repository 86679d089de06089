"""
Trend estimators built on the local eigenvalue curve.

lambda_curve evaluates the leading eigenpair of Sigma(tau_t) over the evaluation set;
a_hat, r_series and q_ratios turn that curve into the trend exponent, growth ratios
across time and loading ratios across units. peak_transform maps single-peak
trajectories back to the increasing-trend form.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

import src.panel_trend.core.config as config
from src.panel_trend.core.exceptions import (
    DegenerateSpectrumError,
    EstimationError,
    PanelTrendError,
    PanelValidationError,
    with_time_index,
)
from src.panel_trend.data.panel import EvaluationSet, Panel
from src.panel_trend.estimation.kernels import KernelSpec, local_constant_smooth
from src.panel_trend.estimation.local_cov import sigma
from src.panel_trend.estimation.spectral import top_eigenpair
from src.panel_trend.utils import ordered_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LambdaPoint:
    t: int
    u: float
    eigenvalue: float
    vector: np.ndarray
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class LambdaCurve:
    """Leading eigenpairs of Sigma(tau_t) for t in the evaluation set, ascending in t."""

    points: Tuple[LambdaPoint, ...]
    unit_ids: Tuple[str, ...]
    n_periods: int
    h: float

    def __len__(self) -> int:
        return len(self.points)

    @property
    def ts(self) -> np.ndarray:
        return np.array([p.t for p in self.points], dtype=np.int64)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.eigenvalue for p in self.points])

    @property
    def vectors(self) -> np.ndarray:
        """len(curve) x N matrix of loadings."""
        return np.vstack([p.vector for p in self.points])

    def point_at(self, t: int) -> LambdaPoint:
        for point in self.points:
            if point.t == t:
                return point
        raise PanelValidationError(f"t={t} is not on the curve.")


@dataclass(frozen=True)
class RatioPoint:
    t: int
    t_next: int
    ratio: float
    defined: bool = True


@dataclass(frozen=True, eq=False)
class QTable:
    """Loading ratios l_{u,i} / l_{u,ref} at one evaluation point."""

    t: int
    u: float
    unit_ids: Tuple[str, ...]
    reference: str
    ratios: np.ndarray
    defined: bool = True


@dataclass(frozen=True, eq=False)
class PeakEstimate:
    gamma_hat: np.ndarray
    argmax_t: np.ndarray


def _lambda_point(panel: Panel, spec: KernelSpec, t: int) -> LambdaPoint:
    u = panel.grid.at(t)
    try:
        pair = top_eigenpair(sigma(panel, spec, u).matrix)
    except PanelTrendError as e:
        raise with_time_index(e, t) from e
    return LambdaPoint(t=t, u=u, eigenvalue=pair.eigenvalue, vector=pair.vector, degenerate=pair.degenerate)


def lambda_curve(
    panel: Panel,
    spec: KernelSpec,
    c_set: EvaluationSet,
    max_workers: Optional[int] = None,
) -> LambdaCurve:
    """
    Leading eigenpair of Sigma(tau_t) for every t in the evaluation set.

    A zero Sigma(tau_t) yields a point with eigenvalue 0 flagged degenerate; a_hat rejects
    curves whose mean eigenvalue is not positive.

    Raises:
        EstimationError: window or convergence failures, with the offending t in the message.
    """
    if c_set.indices[-1] > panel.n_periods:
        raise PanelValidationError(f"Evaluation set reaches t={c_set.indices[-1]} but T={panel.n_periods}.")
    points = ordered_map(lambda t: _lambda_point(panel, spec, t), c_set.indices, max_workers)
    degenerate = sum(p.degenerate for p in points)
    if degenerate:
        logger.warning(f"{degenerate} of {len(points)} evaluation point(s) have a zero local matrix.")
    return LambdaCurve(points=tuple(points), unit_ids=panel.unit_ids, n_periods=panel.n_periods, h=spec.h)


def a_hat(curve: LambdaCurve, n_periods: Optional[int] = None) -> float:
    """
    Trend exponent estimate ln(mean lambda) / (2 ln T).

    Args:
        curve: eigenvalue curve over the evaluation set.
        n_periods: T; defaults to the panel length recorded on the curve.

    Raises:
        DegenerateSpectrumError: if the mean eigenvalue is not positive.
    """
    n_periods = curve.n_periods if n_periods is None else n_periods
    if n_periods < 2:
        raise PanelValidationError(f"T must be at least 2, got {n_periods}.")
    mean_lambda = float(np.mean(curve.eigenvalues)) if len(curve) else 0.0
    if not mean_lambda > 0:
        logger.error(f"Mean eigenvalue {mean_lambda} is not positive.")
        raise DegenerateSpectrumError("degenerate spectrum")
    return math.log(mean_lambda) / (2.0 * math.log(n_periods))


def r_ts(curve: LambdaCurve, t: int, s: int) -> float:
    """R_{ts} = lambda_{tau_t} / lambda_{tau_s} for two points on the curve."""
    denominator = curve.point_at(s).eigenvalue
    if denominator == 0:
        logger.error(f"R_({t},{s}) undefined: zero eigenvalue at t={s}.")
        raise DegenerateSpectrumError(f"degenerate spectrum (zero eigenvalue at t={s})")
    return curve.point_at(t).eigenvalue / denominator


def r_series(curve: LambdaCurve) -> List[RatioPoint]:
    """Ratios R_{t+1,t} between consecutive members of the evaluation set."""
    if len(curve) < 2:
        raise PanelValidationError("The ratio series needs at least two evaluation points.")
    ratios = []
    undefined = 0
    for current, following in zip(curve.points, curve.points[1:]):
        if current.eigenvalue == 0:
            undefined += 1
            ratios.append(RatioPoint(t=current.t, t_next=following.t, ratio=math.nan, defined=False))
        else:
            ratios.append(RatioPoint(t=current.t, t_next=following.t, ratio=following.eigenvalue / current.eigenvalue))
    if undefined:
        logger.warning(f"{undefined} ratio(s) undefined because of a zero eigenvalue.")
    return ratios


def _reference_index(unit_ids: Sequence[str], reference: Union[int, str]) -> int:
    if isinstance(reference, str):
        if reference not in unit_ids:
            raise PanelValidationError(f"Reference unit '{reference}' is not in the panel.")
        return list(unit_ids).index(reference)
    if not 0 <= reference < len(unit_ids):
        raise PanelValidationError(f"Reference index {reference} out of range.")
    return int(reference)


def q_ratios(curve: LambdaCurve, reference: Union[int, str]) -> List[QTable]:
    """
    Loading ratios Q_{u,i,ref} = l_{u,i} / l_{u,ref} at every evaluation point.

    Args:
        curve: eigenpair curve.
        reference: 0-based unit index or unit id of the benchmark unit.

    Returns:
        One QTable per point; points where |l_{u,ref}| < 1e-12 are flagged undefined.
    """
    ref = _reference_index(curve.unit_ids, reference)
    tables = []
    undefined = 0
    for point in curve.points:
        denominator = point.vector[ref]
        if abs(denominator) < config.Q_REFERENCE_TOL:
            undefined += 1
            ratios = np.full(len(curve.unit_ids), np.nan)
            defined = False
        else:
            ratios = point.vector / denominator
            ratios[ref] = 1.0
            defined = True
        tables.append(
            QTable(
                t=point.t,
                u=point.u,
                unit_ids=curve.unit_ids,
                reference=curve.unit_ids[ref],
                ratios=ratios,
                defined=defined,
            )
        )
    if undefined:
        logger.warning(f"Q undefined at {undefined} point(s): reference loading is zero.")
    return tables


def select_reference(final_counts: Mapping[str, float]) -> str:
    """Unit with the largest raw daily increase on the final date; ties go to the first id alphabetically."""
    if not final_counts:
        raise PanelValidationError("No units to choose a reference from.")
    return min(final_counts, key=lambda unit: (-final_counts[unit], unit))


def q_rank_final(tables: Sequence[QTable]) -> List[str]:
    """Units ordered by Q at the last evaluation point, largest first."""
    if not tables or not tables[-1].defined:
        return []
    last = tables[-1]
    return [unit for _, unit in sorted(zip(-last.ratios, last.unit_ids))]


def peak_transform(panel: Panel, spec: KernelSpec) -> Tuple[Panel, PeakEstimate]:
    """
    Reflects single-peak trajectories: y*_it = gamma_hat_i - y_it on active entries.

    gamma_hat_i is the maximum over the unit's active periods of its local-constant
    smooth with bandwidth spec.h.

    Raises:
        PanelValidationError: a unit with fewer than three active periods.
        EstimationError: smoother failures, naming the unit.
    """
    n_periods = panel.n_periods
    gamma_hat = np.empty(panel.n_units)
    argmax_t = np.empty(panel.n_units, dtype=np.int64)
    transformed = np.zeros_like(panel.values)

    for i, unit in enumerate(panel.unit_ids):
        start = int(panel.starts[i])
        if n_periods - start + 1 < 3:
            logger.error(f"Unit '{unit}' has fewer than 3 active periods.")
            raise PanelValidationError(f"Unit '{unit}' needs at least 3 active periods for the peak transform.")
        grid = np.arange(start, n_periods + 1)
        try:
            smoothed = local_constant_smooth(panel.values[i], start, spec, grid)
        except EstimationError as e:
            raise type(e)(f"{e} (unit {unit})") from e
        k = int(np.argmax(smoothed))
        gamma_hat[i] = smoothed[k]
        argmax_t[i] = grid[k]
        transformed[i, start - 1 :] = gamma_hat[i] - panel.values[i, start - 1 :]

    logger.info(f"Peak transform applied to {panel.n_units} units with h={spec.h}.")
    return panel.with_values(transformed), PeakEstimate(gamma_hat=gamma_hat, argmax_t=argmax_t)
