import argparse
import logging
import os
import sys

# Add project root
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import pandas as pd

import src.panel_trend.core.config as config
from src.panel_trend.data.ingest import FeedSchema, load_feed

# Configure logging
logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)


def prepare_ecdc_data(input_path: str, output_path: str) -> pd.DataFrame:
    """
    Convert the legacy ECDC daily feed to the canonical CSV layout.

    Maps:
    - dateRep (DD/MM/YYYY) -> date (YYYY-MM-DD)
    - countryterritoryCode -> country_code
    - continentExp -> region (Asia and Oceania merged into AO)
    - cases, deaths -> new_cases, new_deaths
    """
    logger.info(f"Loading ECDC feed from {input_path}...")
    records = load_feed(input_path, FeedSchema.ECDC)

    df = pd.DataFrame.from_records(records, columns=["date", "country_code", "region", "new_cases", "new_deaths"])
    df["region"] = df["region"].map(lambda r: r.value)
    df[["new_cases", "new_deaths"]] = df[["new_cases", "new_deaths"]].astype("int64")

    os.makedirs(os.path.dirname(os.path.abspath(output_path)), exist_ok=True)
    df.to_csv(output_path, index=False, date_format="%Y-%m-%d")
    logger.info(f"Saved {len(df)} rows for {df['country_code'].nunique()} countries to {output_path}")

    for region, group in df.groupby("region"):
        logger.info(f"  {region}: {group['country_code'].nunique()} countries, {group['date'].min().date()} .. {group['date'].max().date()}")
    return df


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Convert the ECDC feed to the canonical CSV")
    parser.add_argument("--input", default=str(config.RAW_FEED_PATH))
    parser.add_argument("--output", default=str(config.CANONICAL_FEED_PATH))
    args = parser.parse_args()
    prepare_ecdc_data(args.input, args.output)
