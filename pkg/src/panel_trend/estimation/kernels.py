import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np
from numpy import ndarray

from src.panel_trend.core.exceptions import BandwidthTooSmallError, PanelValidationError

logger = logging.getLogger(__name__)


class KernelFamily(str, Enum):
    EPANECHNIKOV = "epanechnikov"


class Boundary(str, Enum):
    RIGHT_ADJUSTED = "right_adjusted"
    NONE = "none"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, bandwidth h in (0, 1] and boundary rule."""

    h: float
    family: KernelFamily = KernelFamily.EPANECHNIKOV
    boundary: Boundary = Boundary.RIGHT_ADJUSTED

    def __post_init__(self):
        if not (0.0 < float(self.h) <= 1.0):
            raise PanelValidationError(f"Bandwidth must lie in (0, 1], got {self.h}.")
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "family", KernelFamily(self.family))
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    def with_bandwidth(self, h: float) -> "KernelSpec":
        return KernelSpec(h=h, family=self.family, boundary=self.boundary)


def epanechnikov(x: ndarray) -> ndarray:
    """Epanechnikov kernel 0.75 (1 - x^2) on [-1, 1], zero outside."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 1, 0.75 * (1 - x**2), 0.0)


def epanechnikov_cdf(x: ndarray) -> ndarray:
    """Closed-form integral of the Epanechnikov kernel from -1 to x."""
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    return 0.75 * (x - x**3 / 3.0) + 0.5


def kernel_weight(spec: KernelSpec, tau: Union[float, ndarray], u: float) -> Union[float, ndarray]:
    """
    Scaled kernel weight K_h(tau - u) = K((tau - u) / h) / h.

    For u in (1 - h, 1] with the right-adjusted boundary, the kernel is renormalized by
    the mass it keeps on [0, 1], i.e. divided by the integral of K from -1 to (1 - u) / h,
    so the weights still integrate to one near the right end. No left adjustment is made.

    Args:
        spec: kernel family, bandwidth and boundary rule.
        tau: normalized time point(s).
        u: evaluation point in [0, 1].

    Returns:
        Nonnegative weight(s), same shape as tau.
    """
    w = (np.asarray(tau, dtype=float) - u) / spec.h
    k = epanechnikov(w)
    if spec.boundary is Boundary.RIGHT_ADJUSTED and u > 1.0 - spec.h:
        k = k / epanechnikov_cdf((1.0 - u) / spec.h)
    k = k / spec.h
    return float(k) if np.ndim(k) == 0 else k


def local_constant_smooth(
    series: Sequence[float],
    active_from: int,
    spec: KernelSpec,
    grid: Sequence[int],
) -> ndarray:
    """
    Nadaraya-Watson local-constant smoother over the active part of one series.

    Args:
        series: length-T values.
        active_from: 1-based index of the first active entry; earlier entries are ignored.
        spec: kernel family, bandwidth and boundary rule.
        grid: 1-based evaluation indices, all >= active_from.

    Returns:
        np.ndarray: smoothed value at each grid index.

    Raises:
        BandwidthTooSmallError: if a grid point sees no kernel mass.
    """
    series = np.asarray(series, dtype=float)
    n_periods = series.size
    grid = np.asarray(grid, dtype=np.int64)
    if grid.size == 0 or grid.min() < active_from or grid.max() > n_periods:
        raise PanelValidationError(f"Smoothing grid must lie within {active_from}..{n_periods}.")

    tau = np.arange(1, n_periods + 1, dtype=float) / n_periods
    active_tau = tau[active_from - 1 :]
    active_values = series[active_from - 1 :]

    smoothed = np.empty(grid.size)
    for k, t in enumerate(grid):
        weights = kernel_weight(spec, active_tau, tau[t - 1])
        mass = weights.sum()
        if mass <= 0:
            logger.error(f"Zero kernel mass at t={t} with h={spec.h}.")
            raise BandwidthTooSmallError(f"bandwidth too small (h={spec.h}, t={t})")
        smoothed[k] = weights @ active_values / mass
    return smoothed
