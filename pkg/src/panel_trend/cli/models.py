from datetime import date
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

import src.panel_trend.core.config as config
from src.panel_trend.data.ingest import FeedSchema, Measure
from src.panel_trend.data.panel import EvalRule, Region, Transform
from src.panel_trend.estimation.rolling import BandwidthPolicy
from src.panel_trend.estimation.synthetic import ModelKind


class RunConfig(BaseModel):
    """Everything one estimate/rolling run needs; defaults follow the standard trim and threshold rules."""

    feed: Optional[str] = None
    feed_schema: FeedSchema = FeedSchema.CANONICAL
    density: Optional[str] = None
    synthetic: Optional[str] = None
    region: Region = Region.EU
    measure: Measure = Measure.INFECTION
    case: Transform = Transform.CASE1
    model: ModelKind = ModelKind.MODEL1
    bandwidth: Optional[float] = Field(None, gt=0, le=1, description="None selects h by cross-validation")
    c_rule: EvalRule = EvalRule.QUARTER_TRIM
    c_margin: Optional[int] = Field(None, ge=0)
    trim_days: Optional[int] = Field(None, ge=0)
    death_threshold: int = Field(config.DEFAULT_DEATH_THRESHOLD, ge=0)
    cutoff_date: Optional[date] = None
    rolling: bool = False
    window: int = Field(config.ROLLING_WINDOW, ge=3)
    rolling_tail: int = Field(config.ROLLING_TAIL, ge=2)
    rolling_policy: BandwidthPolicy = BandwidthPolicy.FIXED_H
    output_dir: str = str(config.OUTPUT_DIR)
    seed: Optional[int] = None
    reference: Optional[str] = None
    max_workers: int = Field(config.MAX_WORKERS, ge=1)

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        if (self.feed is None) == (self.synthetic is None):
            raise ValueError("give exactly one of a feed or a synthetic spec")
        if self.feed is not None and self.case is Transform.CASE2 and self.density is None:
            raise ValueError("case 2 needs a density file")
        if self.c_rule is EvalRule.EXPLICIT and self.c_margin is None:
            raise ValueError("the explicit evaluation rule needs a margin")
        if self.rolling_tail > self.window:
            raise ValueError("rolling evaluation tail is longer than the window")
        if self.trim_days is None:
            self.trim_days = config.ROLLING_TRIM_DAYS if self.rolling else config.DEFAULT_TRIM_DAYS
        return self


class EvaluationSetOut(BaseModel):
    rule: str
    indices: List[int]


class LambdaPointOut(BaseModel):
    t: int
    date: str
    u: float
    eigenvalue: float
    degenerate: bool
    vector: List[float]


class RatioOut(BaseModel):
    t: int
    t_next: int
    date: str
    ratio: Optional[float]
    defined: bool


class QTableOut(BaseModel):
    t: int
    date: str
    u: float
    defined: bool
    ratios: Dict[str, Optional[float]]


class BandwidthOut(BaseModel):
    h_hat: float
    h_l: float
    h_r: float
    selected_by_cv: bool
    h_grid: List[float] = []
    cv_values: List[Optional[float]] = []
    a_per_h: List[Optional[float]] = []


class PeakOut(BaseModel):
    gamma_hat: Dict[str, float]
    argmax_t: Dict[str, int]
    h: float


class EstimationReport(BaseModel):
    version: str = config.APP_VERSION
    model: ModelKind
    region: str
    measure: str
    case: str
    n_units: int
    n_periods: int
    unit_ids: List[str]
    starts: List[int]
    first_date: str
    last_date: str
    c_set: EvaluationSetOut
    bandwidth: BandwidthOut
    a_hat: float
    a_sensitivity: Dict[str, Optional[float]]
    lambda_curve: List[LambdaPointOut]
    r_series: List[RatioOut]
    r_bar: Optional[float]
    q_reference: str
    q_series: List[QTableOut]
    q_rank_final: List[str]
    interpretation: Dict[str, bool]
    peak: Optional[PeakOut] = None
    run_config: Dict[str, Any] = {}
