import logging
import os
import sys
from datetime import date
from enum import Enum
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Union

# Add the project root to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../../..")))

import pandas as pd

import src.panel_trend.core.config as config
from src.panel_trend.core.exceptions import (
    DataNotFoundError,
    FileProcessingError,
    MalformedRowError,
    MissingColumnError,
    NoUnitsSurviveError,
    PanelValidationError,
)
from src.panel_trend.data.panel import Region, UnitSeries

logger = logging.getLogger(__name__)

CANONICAL_COLUMNS = ["date", "country_code", "region", "new_cases", "new_deaths"]
ECDC_COLUMNS = {
    "dateRep": "date",
    "countryterritoryCode": "country_code",
    "continentExp": "region",
    "cases": "new_cases",
    "deaths": "new_deaths",
}
ECDC_CONTINENTS = {"Asia": "AO", "Oceania": "AO", "Europe": "EU", "Africa": "AF", "America": "AM"}
DENSITY_COLUMNS = ["country_code", "density"]


class FeedSchema(str, Enum):
    CANONICAL = "canonical"
    ECDC = "ecdc"


class Measure(str, Enum):
    INFECTION = "infection"
    DEATH = "death"

    @property
    def column(self) -> str:
        return "new_cases" if self is Measure.INFECTION else "new_deaths"


class RawRecord(NamedTuple):
    date: pd.Timestamp
    country_code: str
    region: Region
    new_cases: float
    new_deaths: float


class DensityRecord(NamedTuple):
    country_code: str
    density: float


def _read_csv(path: str, required: Iterable[str]) -> pd.DataFrame:
    if not os.path.exists(path):
        logger.error(f"Input file not found at: {path}")
        raise DataNotFoundError(f"Input file not found at: {path}")
    try:
        logger.info(f"Loading {path}...")
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        logger.error(f"Error parsing CSV file {path}: {e}")
        raise FileProcessingError(f"Could not parse CSV file {path}: {e}")
    df.columns = [c.strip() for c in df.columns]
    for column in required:
        if column not in df.columns:
            logger.error(f"Column '{column}' missing from {path}")
            raise MissingColumnError(column, path)
    return df


def _drop(df: pd.DataFrame, mask: pd.Series, reason: str) -> pd.DataFrame:
    dropped = int(mask.sum())
    if dropped:
        logger.warning(f"Dropped {dropped} row(s): {reason}.")
    return df[~mask]


def load_feed(path: str, schema: Union[FeedSchema, str] = FeedSchema.CANONICAL) -> List[RawRecord]:
    """
    Parses a daily case/death feed into RawRecords.

    The canonical schema is `date,country_code,region,new_cases,new_deaths` with ISO dates.
    The legacy ECDC schema is mapped field by field; Asia and Oceania merge into AO, and
    rows from any other continent are dropped with a counted warning.

    Args:
        path (str): CSV file path.
        schema (FeedSchema): canonical or ecdc.

    Returns:
        List[RawRecord]: sorted by (country_code, date); for a repeated (date, country)
        the last row in file order wins.

    Raises:
        DataNotFoundError: If the file does not exist.
        FileProcessingError: If the CSV cannot be parsed.
        MissingColumnError: If a required column is absent.
        MalformedRowError: For an unparsable date, with its file line number.
    """
    schema = FeedSchema(schema)
    if schema is FeedSchema.ECDC:
        df = _read_csv(path, ECDC_COLUMNS)
        df = df.rename(columns=ECDC_COLUMNS)[CANONICAL_COLUMNS].copy()
        date_format = "%d/%m/%Y"
    else:
        df = _read_csv(path, CANONICAL_COLUMNS)[CANONICAL_COLUMNS].copy()
        date_format = "%Y-%m-%d"

    # Header is line 1.
    df["line"] = df.index + 2
    for column in CANONICAL_COLUMNS:
        df[column] = df[column].str.strip()

    parsed = pd.to_datetime(df["date"], format=date_format, errors="coerce")
    if parsed.isna().any():
        bad = df[parsed.isna()].iloc[0]
        logger.error(f"Malformed date '{bad['date']}' on line {bad['line']} of {path}")
        raise MalformedRowError(int(bad["line"]), f"malformed date '{bad['date']}'")
    df["date"] = parsed

    if schema is FeedSchema.ECDC:
        df["region"] = df["region"].map(ECDC_CONTINENTS)
        df = _drop(df, df["region"].isna(), "continent outside AF/AM/AO/EU")
    else:
        valid_regions = {r.value for r in Region}
        df = _drop(df, ~df["region"].isin(valid_regions), "unknown region")

    df = _drop(df, df["country_code"] == "", "missing country code")
    for column in ("new_cases", "new_deaths"):
        df[column] = pd.to_numeric(df[column], errors="coerce")
    df = _drop(df, df[["new_cases", "new_deaths"]].isna().any(axis=1), "non-numeric counts")

    duplicated = df.duplicated(subset=["date", "country_code"], keep="last")
    df = _drop(df, duplicated, "duplicate (date, country) rows, last occurrence kept")

    df = df.sort_values(["country_code", "date"], kind="mergesort")
    records = [
        RawRecord(row.date, row.country_code, Region(row.region), float(row.new_cases), float(row.new_deaths))
        for row in df.itertuples(index=False)
    ]
    logger.info(f"Loaded {len(records)} records for {df['country_code'].nunique()} countries from {path}")
    return records


def load_density(path: str) -> List[DensityRecord]:
    """Reads `country_code,density`; non-positive or non-numeric densities are dropped with a warning."""
    df = _read_csv(path, DENSITY_COLUMNS)
    df["country_code"] = df["country_code"].str.strip()
    df["density"] = pd.to_numeric(df["density"], errors="coerce")
    df = _drop(df, ~(df["density"] > 0), "non-positive or missing density")
    df = _drop(df, df.duplicated(subset=["country_code"], keep="last"), "duplicate density rows, last kept")
    records = [DensityRecord(row.country_code, float(row.density)) for row in df.itertuples(index=False)]
    logger.info(f"Loaded {len(records)} densities from {path}")
    return records


def density_map(densities: Optional[Sequence[DensityRecord]]) -> Dict[str, float]:
    return {} if densities is None else {d.country_code: d.density for d in densities}


def _records_frame(records: Sequence[RawRecord]) -> pd.DataFrame:
    return pd.DataFrame.from_records(records, columns=RawRecord._fields)


def prepare_region(
    records: Sequence[RawRecord],
    densities: Optional[Sequence[DensityRecord]],
    region: Union[Region, str],
    measure: Union[Measure, str] = Measure.INFECTION,
    trim_days: int = config.DEFAULT_TRIM_DAYS,
    death_threshold: int = config.DEFAULT_DEATH_THRESHOLD,
    cutoff_date: Optional[Union[str, date, pd.Timestamp]] = None,
) -> List[UnitSeries]:
    """
    Applies the sample rules for one region and returns per-unit daily series.

    Units without a density record are excluded. For the death measure, units whose
    cumulative deaths up to the cutoff are below death_threshold are excluded too.
    The region span opens on the first positive count of the measure among the
    remaining units, and its first trim_days days are removed. Each unit then starts on
    its own first positive count (or the trimmed span start, whichever is later) and runs
    to the cutoff, with missing days filled as zero, so every series ends on the same day.

    Args:
        records: parsed feed rows (any regions).
        densities: density table.
        region: AF, AM, AO or EU.
        measure: infection (new_cases) or death (new_deaths).
        trim_days: days removed from the start of the region span.
        death_threshold: minimum cumulative deaths at the cutoff for the death measure.
        cutoff_date: last day kept; defaults to the last date in the feed.

    Returns:
        List[UnitSeries]: one series per surviving unit, sorted by unit id.

    Raises:
        NoUnitsSurviveError: if every unit is filtered out.
    """
    region = Region(region)
    measure = Measure(measure)
    if trim_days < 0 or death_threshold < 0:
        raise PanelValidationError("trim_days and death_threshold must be non-negative.")

    df = _records_frame(records)
    if df.empty:
        raise NoUnitsSurviveError("empty feed")
    cutoff = df["date"].max() if cutoff_date is None else pd.Timestamp(cutoff_date)
    df = df[(df["region"] == region) & (df["date"] <= cutoff)]

    known = set(density_map(densities))
    units = sorted(df["country_code"].unique())
    missing = [u for u in units if u not in known]
    if missing:
        logger.warning(f"Excluded {len(missing)} unit(s) without a density record: {', '.join(missing)}")
    units = [u for u in units if u in known]

    if measure is Measure.DEATH:
        totals = df.groupby("country_code")["new_deaths"].sum()
        few = [u for u in units if totals.get(u, 0.0) < death_threshold]
        if few:
            logger.warning(f"Excluded {len(few)} unit(s) with fewer than {death_threshold} deaths by {cutoff.date()}")
        units = [u for u in units if u not in few]

    df = df[df["country_code"].isin(units)]
    positive = df[df[measure.column] > 0]
    first_positive = positive.groupby("country_code")["date"].min()
    silent = [u for u in units if u not in first_positive.index]
    if silent:
        logger.warning(f"Excluded {len(silent)} unit(s) with no positive {measure.value} count")
    units = [u for u in units if u in first_positive.index]

    if not units:
        logger.error(f"No units survive the filters for {region.value} {measure.value}.")
        raise NoUnitsSurviveError(f"{region.value}, {measure.value}")

    span_start = first_positive.min() + pd.Timedelta(days=trim_days)
    if span_start > cutoff:
        logger.error(f"Trimming {trim_days} days leaves nothing before {cutoff.date()}.")
        raise NoUnitsSurviveError(f"{region.value}, {measure.value}: trim exceeds span")

    series = []
    for unit in units:
        start = max(first_positive[unit], span_start)
        calendar = pd.date_range(start, cutoff, freq="D")
        daily = df[df["country_code"] == unit].set_index("date")[measure.column]
        counts = daily.reindex(calendar, fill_value=0.0).to_numpy(dtype=float)
        series.append(UnitSeries(unit_id=unit, dates=calendar, counts=counts))

    n_periods = (cutoff - span_start).days + 1
    logger.info(f"Prepared {region.value} {measure.value}: N={len(series)}, T={n_periods} (cutoff {cutoff.date()})")
    return series


def series_from_records(records: Sequence[RawRecord], measure: Union[Measure, str] = Measure.INFECTION) -> List[UnitSeries]:
    """Per-unit series exactly as recorded, without trimming or filtering; each unit starts on its first row."""
    measure = Measure(measure)
    df = _records_frame(records)
    if df.empty:
        raise NoUnitsSurviveError("empty feed")
    series = []
    for unit, rows in df.groupby("country_code", sort=True):
        rows = rows.sort_values("date")
        series.append(UnitSeries(unit_id=unit, dates=rows["date"], counts=rows[measure.column].to_numpy(dtype=float)))
    return series


def final_counts(series: Sequence[UnitSeries]) -> Dict[str, float]:
    """Raw count on each unit's last day, keyed by unit id."""
    return {s.unit_id: float(s.counts[-1]) for s in series}


def feed_region(records: Sequence[RawRecord]) -> Region:
    """The single region a feed covers, or custom when it mixes several."""
    regions = {r.region for r in records}
    return regions.pop() if len(regions) == 1 else Region.CUSTOM
