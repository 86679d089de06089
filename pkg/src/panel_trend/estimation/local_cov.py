import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.panel_trend.core.exceptions import EmptyWindowError, PanelValidationError
from src.panel_trend.data.panel import Panel
from src.panel_trend.estimation.kernels import KernelSpec, kernel_weight

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LocalCovariance:
    """Kernel-weighted local second-moment matrix Sigma(u)."""

    u: float
    matrix: np.ndarray
    effective_weight: float


def _weighted_second_moment(panel: Panel, weights: np.ndarray, u: float) -> LocalCovariance:
    effective_weight = float(weights.sum())
    if effective_weight <= 0:
        logger.error(f"No kernel mass around u={u:.6f}.")
        raise EmptyWindowError(f"no observations in window (u={u:.6f})")

    support = np.flatnonzero(weights > 0)
    y = panel.values[:, support]
    w = weights[support]
    # einsum without path optimisation stays off BLAS: fixed, ascending-t summation.
    matrix = np.einsum("it,jt,t->ij", y, y, w, optimize=False)
    matrix /= panel.n_units * panel.n_periods
    matrix = (matrix + matrix.T) / 2.0
    return LocalCovariance(u=u, matrix=matrix, effective_weight=effective_weight)


def sigma(panel: Panel, spec: KernelSpec, u: float) -> LocalCovariance:
    """
    Sigma(u) = (1 / (N T)) * sum_t Y_t Y_t' K_h(tau_t - u).

    Raises:
        EmptyWindowError: if no period carries kernel weight around u.
    """
    if not (0.0 < u <= 1.0):
        raise PanelValidationError(f"Evaluation point must lie in (0, 1], got {u}.")
    weights = kernel_weight(spec, panel.tau, u)
    return _weighted_second_moment(panel, weights, u)


def sigma_loo(panel: Panel, spec: KernelSpec, t_out: int, weights: Optional[np.ndarray] = None) -> LocalCovariance:
    """
    Leave-one-out Sigma at u = tau_{t_out}: the s = t_out term is dropped, divisor stays N T.

    Args:
        panel: the panel.
        spec: kernel family, bandwidth and boundary rule.
        t_out: 1-based index of the period left out.
        weights: precomputed kernel weights at u = tau_{t_out}, if already available.
    """
    if not (1 <= t_out <= panel.n_periods):
        raise PanelValidationError(f"t_out must lie in 1..{panel.n_periods}, got {t_out}.")
    u = panel.grid.at(t_out)
    weights = np.array(kernel_weight(spec, panel.tau, u) if weights is None else weights, dtype=float)
    weights[t_out - 1] = 0.0
    return _weighted_second_moment(panel, weights, u)
