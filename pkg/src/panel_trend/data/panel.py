"""
Unbalanced panel data model.

A panel holds N unit series on a common daily calendar of length T. Entries before a
unit's start index are literal zeros, so downstream kernel sums need no masking.
Time indices in the public API are 1-based; arrays are 0-based.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.panel_trend.core.exceptions import EmptyEvaluationSetError, MissingDensityError, PanelValidationError

logger = logging.getLogger(__name__)


class Region(str, Enum):
    AF = "AF"
    AM = "AM"
    AO = "AO"
    EU = "EU"
    CUSTOM = "custom"


class Transform(str, Enum):
    """How raw daily counts become panel values."""

    CASE1 = "case1"  # ln(count + 1)
    CASE2 = "case2"  # ln((count + 1) / density)
    RAW = "raw"  # values used as given


class EvalRule(str, Enum):
    QUARTER_TRIM = "quarter_trim"
    LOG_N_COUNT = "log_n_count"
    EXPLICIT = "explicit"


def _read_only(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Normalized time points tau_t = t / T, t = 1..T."""

    tau: np.ndarray

    def __post_init__(self):
        tau = _read_only(np.asarray(self.tau, dtype=float).copy())
        if tau.ndim != 1 or tau.size == 0:
            raise PanelValidationError("Time grid must be a non-empty vector.")
        if np.any(np.diff(tau) <= 0):
            raise PanelValidationError("Time grid must be strictly increasing.")
        if tau[-1] != 1.0:
            raise PanelValidationError("Time grid must end at 1.")
        object.__setattr__(self, "tau", tau)

    @classmethod
    def for_periods(cls, n_periods: int) -> "TimeGrid":
        return cls(np.arange(1, n_periods + 1, dtype=float) / n_periods)

    def __len__(self) -> int:
        return int(self.tau.size)

    def at(self, t: int) -> float:
        """Normalized time of the 1-based index t."""
        return float(self.tau[t - 1])


@dataclass(frozen=True)
class EvaluationSet:
    """Ordered set of 1-based time indices where estimates are trusted."""

    indices: tuple
    rule: EvalRule

    def __post_init__(self):
        indices = tuple(int(t) for t in self.indices)
        if not indices:
            raise EmptyEvaluationSetError()
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise PanelValidationError("Evaluation set indices must be strictly ascending.")
        if indices[0] < 1:
            raise PanelValidationError("Evaluation set indices are 1-based.")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "rule", EvalRule(self.rule))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    @property
    def positions(self) -> np.ndarray:
        """0-based array positions of the indices."""
        return np.asarray(self.indices, dtype=np.int64) - 1


@dataclass(frozen=True, eq=False)
class UnitSeries:
    """One unit's daily counts, dated, starting at its first recorded day."""

    unit_id: str
    dates: pd.DatetimeIndex
    counts: np.ndarray

    def __post_init__(self):
        dates = pd.DatetimeIndex(self.dates)
        counts = np.asarray(self.counts, dtype=float)
        if len(dates) != counts.size:
            raise PanelValidationError(f"Unit '{self.unit_id}': {len(dates)} dates but {counts.size} counts.")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True, eq=False)
class Panel:
    """
    Zero-filled N x T panel of transformed counts.

    Attributes:
        values: N x T float matrix; values[i, t] == 0 for every t before starts[i].
        starts: 1-based start index b_iT of each unit.
        unit_ids: unique unit labels (ISO 3166-1 alpha-3 codes for real data).
        time_labels: calendar date of each period.
        region: region the panel was prepared for.
    """

    values: np.ndarray
    starts: np.ndarray
    unit_ids: tuple
    time_labels: pd.DatetimeIndex
    region: Region = Region.CUSTOM
    grid: TimeGrid = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        starts = np.array(self.starts, dtype=np.int64)
        unit_ids = tuple(str(u) for u in self.unit_ids)
        time_labels = pd.DatetimeIndex(self.time_labels)

        if values.ndim != 2:
            raise PanelValidationError("Panel values must be a 2-D matrix.")
        n_units, n_periods = values.shape
        if n_units < 2 or n_periods < 2:
            raise PanelValidationError(f"Panel needs N >= 2 and T >= 2, got N={n_units}, T={n_periods}.")
        if starts.shape != (n_units,) or len(unit_ids) != n_units:
            raise PanelValidationError("starts and unit_ids must have one entry per unit.")
        if len(time_labels) != n_periods:
            raise PanelValidationError("time_labels must have one entry per period.")
        if len(set(unit_ids)) != n_units:
            raise PanelValidationError("unit_ids must be unique.")
        if np.any(starts < 1) or np.any(starts > n_periods):
            raise PanelValidationError("Every start index must lie in 1..T.")
        if not np.all(np.isfinite(values)):
            raise PanelValidationError("Panel values must be finite.")
        if np.any(values[~self._active(starts, n_periods)] != 0.0):
            raise PanelValidationError("Panel values must be zero before each unit's start.")

        object.__setattr__(self, "values", _read_only(values))
        object.__setattr__(self, "starts", _read_only(starts))
        object.__setattr__(self, "unit_ids", unit_ids)
        object.__setattr__(self, "time_labels", time_labels)
        object.__setattr__(self, "region", Region(self.region))
        object.__setattr__(self, "grid", TimeGrid.for_periods(n_periods))

    @staticmethod
    def _active(starts: np.ndarray, n_periods: int) -> np.ndarray:
        return np.arange(1, n_periods + 1)[None, :] >= starts[:, None]

    @property
    def n_units(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_periods(self) -> int:
        return int(self.values.shape[1])

    @property
    def tau(self) -> np.ndarray:
        return self.grid.tau

    def active_mask(self) -> np.ndarray:
        """Boolean N x T mask of entries at or after each unit's start."""
        return self._active(self.starts, self.n_periods)

    def with_values(self, values: np.ndarray) -> "Panel":
        return dataclasses.replace(self, values=values)

    def last_values(self) -> np.ndarray:
        return np.array(self.values[:, -1])

    def window(self, first: int, last: int) -> "Panel":
        """
        Sub-panel over the 1-based period range first..last (inclusive).

        Start indices are re-based to the window; a unit that has not started by the
        end of the window keeps an all-zero row with its start clipped to the last period.
        """
        if not (1 <= first < last <= self.n_periods):
            raise PanelValidationError(f"Invalid window {first}..{last} for T={self.n_periods}.")
        length = last - first + 1
        starts = np.clip(self.starts - first + 1, 1, length)
        late = int(np.sum(self.starts > last))
        if late:
            logger.debug(f"{late} unit(s) start after window end {last}; kept as zero rows.")
        return Panel(
            values=self.values[:, first - 1 : last],
            starts=starts,
            unit_ids=self.unit_ids,
            time_labels=self.time_labels[first - 1 : last],
            region=self.region,
        )

    def to_frame(self) -> pd.DataFrame:
        """Long layout (date, country_code, region, value) over active entries only."""
        rows = []
        for i, unit in enumerate(self.unit_ids):
            start = int(self.starts[i]) - 1
            for t in range(start, self.n_periods):
                rows.append((self.time_labels[t], unit, self.region.value, float(self.values[i, t])))
        return pd.DataFrame(rows, columns=["date", "country_code", "region", "value"])


def _transform_counts(counts: np.ndarray, transform: Transform, density: Optional[float]) -> np.ndarray:
    if transform is Transform.RAW:
        return counts
    if transform is Transform.CASE1:
        return np.log1p(counts)
    return np.log((counts + 1.0) / density)


def build_panel(
    series: Sequence[UnitSeries],
    transform: Union[Transform, str] = Transform.CASE1,
    densities: Optional[Mapping[str, float]] = None,
    region: Union[Region, str] = Region.CUSTOM,
) -> Panel:
    """
    Places per-unit daily series on their common calendar and applies a log transform.

    Each unit starts at its first recorded day. Days without a row between a unit's
    start and the end of the span count as zero. Negative counts (feed corrections)
    are clamped to zero before the log transforms; non-finite counts are rejected
    row by row.

    Args:
        series: per-unit dated counts.
        transform: case1 = ln(count + 1); case2 = ln((count + 1) / density); raw = as given.
        densities: unit_id -> people per square km, required for case2.
        region: region tag carried by the panel.

    Returns:
        Panel: the zero-filled panel.

    Raises:
        MissingDensityError: case2 requested for a unit without a positive density.
        PanelValidationError: empty input or a unit with no usable rows.
    """
    transform = Transform(transform)
    if not series:
        raise PanelValidationError("No unit series supplied.")

    span_start = min(s.dates.min() for s in series if len(s.dates))
    span_end = max(s.dates.max() for s in series if len(s.dates))
    calendar = pd.date_range(span_start, span_end, freq="D")
    n_periods = len(calendar)

    values = np.zeros((len(series), n_periods))
    starts = np.zeros(len(series), dtype=np.int64)
    rejected = 0
    clamped = 0

    for i, unit in enumerate(series):
        density = None
        if transform is Transform.CASE2:
            density = None if densities is None else densities.get(unit.unit_id)
            if density is None or not math.isfinite(density) or density <= 0:
                logger.error(f"Case 2 transform requested but unit '{unit.unit_id}' has no density.")
                raise MissingDensityError(unit.unit_id)

        finite = np.isfinite(unit.counts)
        rejected += int(np.sum(~finite))
        counts = unit.counts[finite]
        positions = calendar.get_indexer(unit.dates[finite])
        if counts.size == 0:
            raise PanelValidationError(f"Unit '{unit.unit_id}' has no finite counts.")

        if transform is not Transform.RAW:
            clamped += int(np.sum(counts < 0))
            counts = np.maximum(counts, 0.0)

        full = np.zeros(n_periods)
        full[positions] = counts
        start = int(positions.min())
        starts[i] = start + 1
        values[i, start:] = _transform_counts(full[start:], transform, density)

    if rejected:
        logger.warning(f"Rejected {rejected} row(s) with non-finite counts.")
    if clamped:
        logger.warning(f"Clamped {clamped} negative count(s) to zero before the log transform.")

    panel = Panel(
        values=values,
        starts=starts,
        unit_ids=tuple(s.unit_id for s in series),
        time_labels=calendar,
        region=region,
    )
    logger.info(f"Built {transform.value} panel with N={panel.n_units}, T={panel.n_periods}.")
    return panel


def eval_set(panel: Panel, rule: Union[EvalRule, str] = EvalRule.QUARTER_TRIM, margin: Optional[int] = None) -> EvaluationSet:
    """
    Builds the evaluation set of time indices.

    quarter_trim: {floor(T/4)+1, ..., T}.
    log_n_count: {t : #{i : starts[i] <= t} >= N - ln N}.
    explicit: {max_i starts[i] - margin, ..., T}, clipped to 1..T.
    """
    rule = EvalRule(rule)
    n_units, n_periods = panel.n_units, panel.n_periods

    if rule is EvalRule.QUARTER_TRIM:
        indices = range(n_periods // 4 + 1, n_periods + 1)
    elif rule is EvalRule.LOG_N_COUNT:
        started = np.searchsorted(np.sort(panel.starts), np.arange(1, n_periods + 1), side="right")
        threshold = n_units - math.log(n_units)
        indices = [t for t, count in zip(range(1, n_periods + 1), started) if count >= threshold]
    else:
        if margin is None or margin < 0:
            raise PanelValidationError("The explicit rule needs a non-negative margin.")
        first = max(int(panel.starts.max()) - margin, 1)
        indices = range(first, n_periods + 1)

    indices = tuple(indices)
    if not indices:
        logger.error(f"Rule '{rule.value}' selected no time index for T={n_periods}.")
        raise EmptyEvaluationSetError(rule.value)
    return EvaluationSet(indices=indices, rule=rule)


def rescale(panel: Panel, c: float) -> Panel:
    """Multiplies every active entry by c > 0; starts are unchanged."""
    if not math.isfinite(c) or c <= 0:
        raise PanelValidationError(f"Scale factor must be positive, got {c}.")
    return panel.with_values(panel.values * c)
