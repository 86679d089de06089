"""
Command-line front end: `panel-trend {estimate,rolling,simulate}`.

estimate  ingest -> panel -> bandwidth -> lambda curve -> a_hat, R, Q tables + report.json
rolling   rolling-window (a_hat, R_bar) series as rolling.csv
simulate  synthetic panel as canonical CSV plus truth.json
"""

import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Optional, Tuple

# Add the project root to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../../..")))

import pandas as pd
from pydantic import ValidationError

import src.panel_trend.core.config as config
from src.panel_trend.cli.models import (
    BandwidthOut,
    EstimationReport,
    EvaluationSetOut,
    LambdaPointOut,
    PeakOut,
    QTableOut,
    RatioOut,
    RunConfig,
)
from src.panel_trend.core.exceptions import PanelTrendError
from src.panel_trend.core.logging_config import configure_logging
from src.panel_trend.data.ingest import (
    density_map,
    feed_region,
    final_counts,
    load_density,
    load_feed,
    prepare_region,
    series_from_records,
)
from src.panel_trend.data.panel import EvalRule, Panel, Region, Transform, build_panel, eval_set
from src.panel_trend.estimation.bandwidth import CvResult, select_bandwidth, select_peak_bandwidth
from src.panel_trend.estimation.estimators import (
    a_hat,
    lambda_curve,
    PeakEstimate,
    peak_transform,
    q_rank_final,
    q_ratios,
    r_series,
    select_reference,
)
from src.panel_trend.estimation.kernels import KernelSpec
from src.panel_trend.estimation.rolling import RollingRow, rolling_windows
from src.panel_trend.estimation.synthetic import GroundTruth, ModelKind, generate, spec_from_file
from src.panel_trend.utils import json_safe, write_outputs

logger = logging.getLogger(__name__)

CASE_CHOICES = {"1": Transform.CASE1, "2": Transform.CASE2, "raw": Transform.RAW}
C_RULES = {"quarter": EvalRule.QUARTER_TRIM, "logn": EvalRule.LOG_N_COUNT}


def _csv(df: pd.DataFrame) -> str:
    return df.to_csv(index=False, float_format=config.FLOAT_FORMAT, lineterminator="\n")


def _json(payload: dict) -> str:
    return json.dumps(json_safe(payload), sort_keys=True, indent=2) + "\n"


def _date(panel: Panel, t: int) -> str:
    return panel.time_labels[t - 1].strftime("%Y-%m-%d")


def load_panel(cfg: RunConfig) -> Tuple[Panel, Dict[str, float], Optional[GroundTruth]]:
    """
    Builds the panel a run works on, with the raw last-day counts used to pick the Q reference.

    Returns:
        (panel, final raw counts per unit, ground truth for synthetic runs)
    """
    if cfg.synthetic is not None:
        spec = spec_from_file(cfg.synthetic)
        if cfg.seed is not None:
            spec = spec.model_copy(update={"seed": cfg.seed})
        panel, truth = generate(spec)
        counts = dict(zip(panel.unit_ids, panel.last_values().tolist()))
        return panel, counts, truth

    records = load_feed(cfg.feed, cfg.feed_schema)
    densities = load_density(cfg.density) if cfg.density else None
    if cfg.region is Region.CUSTOM:
        series = series_from_records(records, cfg.measure)
        region = feed_region(records)
    else:
        series = prepare_region(
            records,
            densities,
            cfg.region,
            measure=cfg.measure,
            trim_days=cfg.trim_days,
            death_threshold=cfg.death_threshold,
            cutoff_date=cfg.cutoff_date,
        )
        region = cfg.region
    panel = build_panel(series, cfg.case, density_map(densities) if densities else None, region)
    return panel, final_counts(series), None


def _model_of(cfg: RunConfig, truth: Optional[GroundTruth]) -> ModelKind:
    return truth.model if truth is not None else cfg.model


def _bandwidth(panel: Panel, cfg: RunConfig, c_set) -> Tuple[float, Optional[CvResult]]:
    if cfg.bandwidth is not None:
        return cfg.bandwidth, None
    cv = select_bandwidth(panel, c_set, max_workers=cfg.max_workers)
    return cv.h_hat, cv


def _reflect(panel: Panel, cfg: RunConfig, model: ModelKind) -> Tuple[Panel, Optional[PeakEstimate], Optional[float]]:
    """
    Returns (estimation panel, peak estimate, smoother bandwidth).

    Under model 2 the peak smoother gets its own leave-one-out bandwidth unless a fixed h
    was given; model 1 panels pass through unchanged.
    """
    if model is not ModelKind.MODEL2:
        return panel, None, None
    if cfg.bandwidth is not None:
        h_peak = cfg.bandwidth
    else:
        h_peak = select_peak_bandwidth(panel, max_workers=cfg.max_workers).h_hat
    work, peak = peak_transform(panel, KernelSpec(h=h_peak))
    return work, peak, h_peak


def estimate(panel: Panel, cfg: RunConfig, counts: Dict[str, float], model: ModelKind) -> EstimationReport:
    """
    Runs the full estimation on one panel.

    Under model 2 the panel is reflected first, and the estimation bandwidth is then
    cross-validated on the reflected panel.
    """
    c_set = eval_set(panel, cfg.c_rule, cfg.c_margin)
    work, peak, h_peak = _reflect(panel, cfg, model)
    h, cv = _bandwidth(work, cfg, c_set)
    spec = KernelSpec(h=h)

    curve = lambda_curve(work, spec, c_set, max_workers=cfg.max_workers)
    estimate_a = a_hat(curve)

    h_l = config.BANDWIDTH_LEFT_FACTOR * h
    h_r = config.BANDWIDTH_RIGHT_FACTOR * h
    sensitivity = {"h_hat": estimate_a, "h_l": None, "h_r": None}
    for label, h_alt in (("h_l", h_l), ("h_r", h_r)):
        if h_alt <= 1.0:
            alt_curve = lambda_curve(work, spec.with_bandwidth(h_alt), c_set, max_workers=cfg.max_workers)
            sensitivity[label] = a_hat(alt_curve)
        else:
            logger.warning(f"{label}={h_alt:.4f} exceeds 1; sensitivity estimate skipped.")

    ratios = r_series(curve) if len(curve) >= 2 else []
    defined = [r.ratio for r in ratios if r.defined]
    reference = cfg.reference or select_reference(counts)
    tables = q_ratios(curve, reference)

    report = EstimationReport(
        model=model,
        region=panel.region.value,
        measure=cfg.measure.value if cfg.synthetic is None else "synthetic",
        case=cfg.case.value if cfg.synthetic is None else Transform.RAW.value,
        n_units=panel.n_units,
        n_periods=panel.n_periods,
        unit_ids=list(panel.unit_ids),
        starts=[int(b) for b in panel.starts],
        first_date=_date(panel, 1),
        last_date=_date(panel, panel.n_periods),
        c_set=EvaluationSetOut(rule=c_set.rule.value, indices=list(c_set.indices)),
        bandwidth=BandwidthOut(
            h_hat=h,
            h_l=h_l,
            h_r=h_r,
            selected_by_cv=cv is not None,
            h_grid=cv.h_grid if cv else [],
            cv_values=cv.cv_values if cv else [],
            a_per_h=cv.a_per_h if cv else [],
        ),
        a_hat=estimate_a,
        a_sensitivity=sensitivity,
        lambda_curve=[
            LambdaPointOut(
                t=p.t, date=_date(panel, p.t), u=p.u, eigenvalue=p.eigenvalue, degenerate=p.degenerate, vector=p.vector.tolist()
            )
            for p in curve.points
        ],
        r_series=[
            RatioOut(t=r.t, t_next=r.t_next, date=_date(panel, r.t_next), ratio=r.ratio if r.defined else None, defined=r.defined)
            for r in ratios
        ],
        r_bar=sum(defined) / len(defined) if defined else None,
        q_reference=tables[0].reference,
        q_series=[
            QTableOut(
                t=q.t,
                date=_date(panel, q.t),
                u=q.u,
                defined=q.defined,
                ratios={unit: (float(x) if q.defined else None) for unit, x in zip(q.unit_ids, q.ratios)},
            )
            for q in tables
        ],
        q_rank_final=q_rank_final(tables),
        interpretation={
            "r_effective_below_one": model is ModelKind.MODEL1,
            "q_better_below_one": model is ModelKind.MODEL1,
        },
        peak=None
        if peak is None
        else PeakOut(
            gamma_hat=dict(zip(panel.unit_ids, peak.gamma_hat.tolist())),
            argmax_t=dict(zip(panel.unit_ids, [int(t) for t in peak.argmax_t])),
            h=h_peak,
        ),
        run_config=cfg.model_dump(mode="json", exclude={"output_dir", "max_workers"}),
    )
    logger.info(f"a_hat={estimate_a:.6f} at h={h:.6f} (N={panel.n_units}, T={panel.n_periods}, |C|={len(c_set)})")
    return report


def render_estimate(report: EstimationReport) -> Dict[str, str]:
    """File name -> contents for the estimate outputs."""
    a_rows = [
        (report.region, report.case, report.measure, report.model.value, label, h, report.a_sensitivity[key])
        for label, key, h in (
            ("h_hat", "h_hat", report.bandwidth.h_hat),
            ("h_l", "h_l", report.bandwidth.h_l),
            ("h_r", "h_r", report.bandwidth.h_r),
        )
    ]
    a_df = pd.DataFrame(a_rows, columns=["region", "case", "measure", "model", "bandwidth", "h", "a_hat"])
    r_df = pd.DataFrame(
        [(r.t, r.t_next, r.date, r.ratio, r.defined) for r in report.r_series],
        columns=["t", "t_next", "date", "R", "defined"],
    )
    q_df = pd.DataFrame(
        [
            (q.t, q.u, q.date, unit, report.q_reference, value)
            for q in report.q_series
            for unit, value in q.ratios.items()
        ],
        columns=["t", "u", "date", "unit", "reference", "Q"],
    )
    return {
        config.A_HAT_FILE: _csv(a_df),
        config.R_SERIES_FILE: _csv(r_df),
        config.Q_SERIES_FILE: _csv(q_df),
        config.REPORT_FILE: _json(report.model_dump(mode="json")),
    }


def render_rolling(rows: List[RollingRow]) -> str:
    df = pd.DataFrame([row.model_dump() for row in rows], columns=list(RollingRow.model_fields))
    return _csv(df)


def _rolling_rows(panel: Panel, cfg: RunConfig, model: ModelKind) -> List[RollingRow]:
    c_set = eval_set(panel, cfg.c_rule, cfg.c_margin)
    work, _, _ = _reflect(panel, cfg, model)
    h, _ = _bandwidth(work, cfg, c_set)
    return rolling_windows(
        work, KernelSpec(h=h), window=cfg.window, policy=cfg.rolling_policy, tail=cfg.rolling_tail, max_workers=cfg.max_workers
    )


def _write(cfg: RunConfig, files: Dict[str, str]) -> List[str]:
    return write_outputs({os.path.join(cfg.output_dir, name): text for name, text in files.items()})


def cmd_estimate(cfg: RunConfig) -> List[str]:
    """Writes a_hat.csv, r_series.csv, q_series.csv and report.json (plus rolling.csv with --rolling)."""
    panel, counts, truth = load_panel(cfg)
    model = _model_of(cfg, truth)
    files = render_estimate(estimate(panel, cfg, counts, model))
    if cfg.rolling:
        files[config.ROLLING_FILE] = render_rolling(_rolling_rows(panel, cfg, model))
    return _write(cfg, files)


def cmd_rolling(cfg: RunConfig) -> List[str]:
    """Writes rolling.csv, one row per window."""
    panel, _, truth = load_panel(cfg)
    rows = _rolling_rows(panel, cfg, _model_of(cfg, truth))
    return _write(cfg, {config.ROLLING_FILE: render_rolling(rows)})


def cmd_simulate(spec_path: str, output_dir: str, seed: Optional[int] = None) -> List[str]:
    """Writes the synthetic panel as canonical CSV (panel.csv) and its ground truth (truth.json)."""
    spec = spec_from_file(spec_path)
    if seed is not None:
        spec = spec.model_copy(update={"seed": seed})
    panel, truth = generate(spec)

    frame = panel.to_frame().rename(columns={"value": "new_cases"})
    frame["new_deaths"] = 0
    frame = frame[["date", "country_code", "region", "new_cases", "new_deaths"]]
    files = {
        config.SYNTHETIC_PANEL_FILE: frame.to_csv(
            index=False, float_format=config.FLOAT_FORMAT, date_format="%Y-%m-%d", lineterminator="\n"
        ),
        config.TRUTH_FILE: _json(truth.model_dump(mode="json")),
    }
    return write_outputs({os.path.join(output_dir, name): text for name, text in files.items()})


def _parse_bandwidth(value: str) -> Optional[float]:
    if value == "auto":
        return None
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got '{value}'")


def _parse_c_rule(value: str) -> Tuple[EvalRule, Optional[int]]:
    if value in C_RULES:
        return C_RULES[value], None
    if value.startswith("explicit:"):
        try:
            return EvalRule.EXPLICIT, int(value.split(":", 1)[1])
        except ValueError:
            pass
    raise argparse.ArgumentTypeError(f"expected quarter, logn or explicit:K, got '{value}'")


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--feed", help="daily case/death CSV")
    source.add_argument("--synthetic", help="synthetic spec (JSON) used instead of a feed")
    parser.add_argument("--schema", choices=["canonical", "ecdc"], default="canonical", help="feed layout")
    parser.add_argument("--density", help="country_code,density CSV")
    parser.add_argument("--region", choices=[r.value for r in Region], default=Region.EU.value)
    parser.add_argument("--measure", choices=["infection", "death"], default="infection")
    parser.add_argument("--case", choices=list(CASE_CHOICES), default="1")
    parser.add_argument("--model", choices=["1", "2"], default="1")
    parser.add_argument("--h", type=_parse_bandwidth, default=None, help="'auto' (cross-validation) or a bandwidth")
    parser.add_argument("--c-rule", type=_parse_c_rule, default=(EvalRule.QUARTER_TRIM, None))
    parser.add_argument("--trim", type=int, default=None, help="days removed from the start of the region span")
    parser.add_argument("--death-threshold", type=int, default=config.DEFAULT_DEATH_THRESHOLD)
    parser.add_argument("--cutoff", default=None, help="YYYY-MM-DD; defaults to the last feed date")
    parser.add_argument("--window", type=int, default=config.ROLLING_WINDOW)
    parser.add_argument("--policy", choices=["fixed_h", "per_window_cv"], default="fixed_h")
    parser.add_argument("--out", default=str(config.OUTPUT_DIR))
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--reference", default=None, help="unit id of the Q benchmark")
    parser.add_argument("--workers", type=int, default=config.MAX_WORKERS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panel-trend", description="Deterministic trend estimation for unbalanced panels")
    parser.add_argument("--log-level", default=config.LOG_LEVEL)
    parser.add_argument("--no-log-file", action="store_true", help="log to stderr only")
    commands = parser.add_subparsers(dest="command", required=True)

    estimate_parser = commands.add_parser("estimate", help="estimate a, R and Q")
    _add_run_arguments(estimate_parser)
    estimate_parser.add_argument("--rolling", action="store_true", help="also write rolling.csv")

    rolling_parser = commands.add_parser("rolling", help="rolling-window estimates")
    _add_run_arguments(rolling_parser)

    simulate_parser = commands.add_parser("simulate", help="write a synthetic panel")
    simulate_parser.add_argument("--spec", required=True)
    simulate_parser.add_argument("--out", default=str(config.OUTPUT_DIR))
    simulate_parser.add_argument("--seed", type=int, default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    rule, margin = args.c_rule
    return RunConfig(
        feed=args.feed,
        feed_schema=args.schema,
        density=args.density,
        synthetic=args.synthetic,
        region=args.region,
        measure=args.measure,
        case=CASE_CHOICES[args.case],
        model=ModelKind.MODEL1 if args.model == "1" else ModelKind.MODEL2,
        bandwidth=args.h,
        c_rule=rule,
        c_margin=margin,
        trim_days=args.trim,
        death_threshold=args.death_threshold,
        cutoff_date=args.cutoff,
        rolling=args.command == "rolling" or getattr(args, "rolling", False),
        window=args.window,
        rolling_policy=args.policy,
        output_dir=args.out,
        seed=args.seed,
        reference=args.reference,
        max_workers=args.workers,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(
        log_file=None if args.no_log_file else "panel_trend.log",
        log_level=args.log_level.upper(),
        log_dir=config.LOG_DIR,
        command=args.command,
    )

    try:
        if args.command == "simulate":
            written = cmd_simulate(args.spec, args.out, args.seed)
        else:
            cfg = config_from_args(args)
            written = cmd_estimate(cfg) if args.command == "estimate" else cmd_rolling(cfg)
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"error: invalid configuration: {e}", file=sys.stderr)
        return 2
    except PanelTrendError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1

    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
