"""
Ground-truth panels for the increasing-trend and single-peak models.

Model 1:  y_it = g_i(tau_t) |t - beta_i|^a + e_it   for t >= b_i, 0 before,
Model 2:  y_it = gamma_i - g_i(tau_t) |t - beta_i|^a + e_it,
with beta_i = b_i - 1 and b_i = floor(f_i T) + 1 from the start fraction f_i.
"""

import logging
import math
import os
from enum import Enum
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, model_validator

import src.panel_trend.core.config as config
from src.panel_trend.core.exceptions import DataNotFoundError, OracleError, SpecError
from src.panel_trend.data.panel import Panel
from src.panel_trend.estimation.kernels import Boundary
from src.panel_trend.estimation.spectral import full_spectrum_oracle

logger = logging.getLogger(__name__)


class ModelKind(str, Enum):
    MODEL1 = "model1"
    MODEL2 = "model2"


class NoiseLaw(str, Enum):
    GAUSSIAN = "gaussian"
    NONE = "none"


class ConstantProfile(BaseModel):
    kind: Literal["constant"] = "constant"
    level: float

    def evaluate(self, tau: np.ndarray) -> np.ndarray:
        return np.full_like(tau, self.level, dtype=float)

    def minimum(self) -> float:
        return self.level


class LinearProfile(BaseModel):
    kind: Literal["linear"] = "linear"
    slope: float
    intercept: float

    def evaluate(self, tau: np.ndarray) -> np.ndarray:
        return self.intercept + self.slope * tau

    def minimum(self) -> float:
        return min(self.intercept, self.intercept + self.slope)


class SinusoidProfile(BaseModel):
    kind: Literal["sinusoid"] = "sinusoid"
    amplitude: float
    period: float = Field(..., gt=0)
    offset: float
    phase: float = 0.0

    def evaluate(self, tau: np.ndarray) -> np.ndarray:
        return self.offset + self.amplitude * np.sin(2.0 * np.pi * tau / self.period + self.phase)

    def minimum(self) -> float:
        return self.offset - abs(self.amplitude)


class TentProfile(BaseModel):
    """g(tau) = level + slope * |tau - center|."""

    kind: Literal["tent"] = "tent"
    level: float
    slope: float
    center: float = Field(0.5, ge=0, le=1)

    def evaluate(self, tau: np.ndarray) -> np.ndarray:
        return self.level + self.slope * np.abs(tau - self.center)

    def minimum(self) -> float:
        if self.slope >= 0:
            return self.level
        return self.level + self.slope * max(self.center, 1.0 - self.center)


Profile = Annotated[
    Union[ConstantProfile, LinearProfile, SinusoidProfile, TentProfile],
    Field(discriminator="kind"),
]


class SyntheticSpec(BaseModel):
    n_units: int = Field(..., ge=2)
    n_periods: int = Field(..., ge=2)
    a_true: float = Field(..., gt=0, lt=1)
    g_profiles: List[Profile]
    start_fractions: Optional[List[float]] = None
    noise_sd: float = Field(0.0, ge=0)
    noise_law: NoiseLaw = NoiseLaw.GAUSSIAN
    model: ModelKind = ModelKind.MODEL1
    gamma: Optional[List[float]] = None
    seed: int = 0
    start_date: str = config.SYNTHETIC_START_DATE

    @model_validator(mode="after")
    def _check_consistency(self) -> "SyntheticSpec":
        if len(self.g_profiles) != self.n_units:
            raise ValueError(f"g_profiles has {len(self.g_profiles)} entries for {self.n_units} units")
        for i, profile in enumerate(self.g_profiles):
            if not profile.minimum() > 0:
                raise ValueError(f"profile {i} is not strictly positive on [0, 1]")
        if self.start_fractions is not None:
            if len(self.start_fractions) != self.n_units:
                raise ValueError("start_fractions needs one entry per unit")
            if any(not 0 <= f < 1 for f in self.start_fractions):
                raise ValueError("start fractions must lie in [0, 1)")
        if self.model is ModelKind.MODEL2:
            if self.gamma is None or len(self.gamma) != self.n_units:
                raise ValueError("model2 needs one gamma per unit")
        return self

    @property
    def noiseless(self) -> bool:
        return self.noise_law is NoiseLaw.NONE or self.noise_sd == 0

    @property
    def unit_ids(self) -> Tuple[str, ...]:
        width = len(str(self.n_units))
        return tuple(f"U{i + 1:0{width}d}" for i in range(self.n_units))

    def starts(self) -> np.ndarray:
        fractions = np.zeros(self.n_units) if self.start_fractions is None else np.asarray(self.start_fractions)
        return np.floor(fractions * self.n_periods).astype(np.int64) + 1


class GroundTruth(BaseModel):
    model: ModelKind
    a_true: float
    seed: int
    noise_sd: float
    unit_ids: List[str]
    starts: List[int]
    g_values: List[List[float]]
    gamma: Optional[List[float]] = None
    peak_t: Optional[List[int]] = None


def load_spec(text: str) -> SyntheticSpec:
    """Parses a JSON spec. Syntax errors carry the line and column; validation errors name the field path."""
    try:
        return SyntheticSpec.model_validate_json(text)
    except ValidationError as e:
        details = []
        for error in e.errors():
            location = ".".join(str(part) for part in error.get("loc", ())) or "<root>"
            details.append(f"{location}: {error['msg']}")
        logger.error(f"Invalid synthetic spec: {'; '.join(details)}")
        raise SpecError(f"Invalid synthetic spec: {'; '.join(details)}") from e


def trend_values(spec: SyntheticSpec) -> np.ndarray:
    """Noiseless g_i(tau_t) |t - beta_i|^a on active entries, zero before each start."""
    n_periods = spec.n_periods
    t = np.arange(1, n_periods + 1, dtype=float)
    tau = t / n_periods
    starts = spec.starts()
    trend = np.zeros((spec.n_units, n_periods))
    for i, profile in enumerate(spec.g_profiles):
        active = t >= starts[i]
        beta = starts[i] - 1
        trend[i, active] = profile.evaluate(tau[active]) * np.abs(t[active] - beta) ** spec.a_true
    return trend


def _noise(spec: SyntheticSpec) -> np.ndarray:
    if spec.noiseless:
        return np.zeros((spec.n_units, spec.n_periods))
    streams = np.random.SeedSequence(spec.seed).spawn(spec.n_units)
    return np.vstack([np.random.default_rng(s).normal(0.0, spec.noise_sd, spec.n_periods) for s in streams])


def generate(spec: SyntheticSpec) -> Tuple[Panel, GroundTruth]:
    """
    Draws a panel from a synthetic spec.

    Each unit has its own child stream of SeedSequence(seed), drawn over all T periods,
    so a unit's noise does not depend on the other units or on its start.

    Returns:
        (panel, ground truth with g on the tau grid, starts, gamma and the true peak index)
    """
    starts = spec.starts()
    trend = trend_values(spec)
    active = np.arange(1, spec.n_periods + 1)[None, :] >= starts[:, None]

    if spec.model is ModelKind.MODEL2:
        signal = np.asarray(spec.gamma)[:, None] - trend
    else:
        signal = trend
    values = np.where(active, signal + _noise(spec), 0.0)

    tau = np.arange(1, spec.n_periods + 1, dtype=float) / spec.n_periods
    peak_t = None
    if spec.model is ModelKind.MODEL2:
        peak_t = [int(starts[i] + np.argmax(signal[i, starts[i] - 1 :])) for i in range(spec.n_units)]

    panel = Panel(
        values=values,
        starts=starts,
        unit_ids=spec.unit_ids,
        time_labels=pd.date_range(spec.start_date, periods=spec.n_periods, freq="D"),
    )
    truth = GroundTruth(
        model=spec.model,
        a_true=spec.a_true,
        seed=spec.seed,
        noise_sd=spec.noise_sd if not spec.noiseless else 0.0,
        unit_ids=list(spec.unit_ids),
        starts=[int(b) for b in starts],
        g_values=[[float(x) for x in p.evaluate(tau)] for p in spec.g_profiles],
        gamma=spec.gamma,
        peak_t=peak_t,
    )
    logger.info(f"Generated {spec.model.value} panel N={spec.n_units}, T={spec.n_periods}, seed={spec.seed}.")
    return panel, truth


def oracle_lambda(
    spec: SyntheticSpec,
    h: float,
    u: float,
    boundary: Boundary = Boundary.RIGHT_ADJUSTED,
) -> float:
    """
    Top eigenvalue of Sigma(u) summed term by term from the analytic trend.

    Kernel weights are written out directly and the eigenvalue comes from the Jacobi
    oracle, so this path shares no code with lambda_curve.

    Raises:
        OracleError: for noisy specs or N > 64.
    """
    if not spec.noiseless:
        raise OracleError("oracle is noiseless-only")
    n, n_periods = spec.n_units, spec.n_periods
    trend = trend_values(spec)
    signal = np.asarray(spec.gamma)[:, None] - trend if spec.model is ModelKind.MODEL2 else trend
    starts = spec.starts()

    divisor = 1.0
    if boundary is Boundary.RIGHT_ADJUSTED and u > 1.0 - h:
        x = min(max((1.0 - u) / h, -1.0), 1.0)
        divisor = 0.75 * (x - x**3 / 3.0) + 0.5

    matrix = np.zeros((n, n))
    for t in range(1, n_periods + 1):
        w = (t / n_periods - u) / h
        if abs(w) > 1:
            continue
        weight = 0.75 * (1.0 - w * w) / divisor / h
        y = np.array([signal[i, t - 1] if t >= starts[i] else 0.0 for i in range(n)])
        for i in range(n):
            for j in range(n):
                matrix[i, j] += y[i] * y[j] * weight
    matrix /= n * n_periods
    return float(full_spectrum_oracle(matrix)[-1])


def spec_from_file(path: str) -> SyntheticSpec:
    if not os.path.exists(path):
        logger.error(f"Synthetic spec not found at {path}")
        raise DataNotFoundError(f"Synthetic spec not found at {path}")
    with open(path, "r", encoding="utf-8") as f:
        return load_spec(f.read())


def oracle_a_hat(spec: SyntheticSpec, h: float, c_indices, boundary: Boundary = Boundary.RIGHT_ADJUSTED) -> float:
    """a_hat computed from oracle_lambda over the given evaluation indices."""
    lambdas = [oracle_lambda(spec, h, t / spec.n_periods, boundary) for t in c_indices]
    return math.log(float(np.mean(lambdas))) / (2.0 * math.log(spec.n_periods))
