"""Shared fixtures: bundled synthetic market and small dataset builders."""

from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest

from crn.market_data import (
    Dataset,
    align_calendar,
    load_exogenous_csv,
    load_ohlcv_csv,
    merge_exogenous,
)

FIXTURE_DIR = Path(__file__).parent.parent / "fixtures"


def make_dates(n, start=date(2021, 1, 1)):
    return [start + timedelta(days=i) for i in range(n)]


def make_price_dataset(n=120, seed=0, drift=0.001, vol=0.02, asset="testcoin"):
    """Random-walk OHLCV dataset with consistent high/low bounds."""
    rng = np.random.default_rng(seed)
    rets = drift + vol * rng.standard_normal(n)
    closes = 100.0 * np.cumprod(np.concatenate([[1.0], 1.0 + rets[:-1]]))
    opens = closes * (1.0 + 0.003 * rng.standard_normal(n))
    highs = np.maximum(opens, closes) * (1.0 + np.abs(0.004 * rng.standard_normal(n)))
    lows = np.minimum(opens, closes) * (1.0 - np.abs(0.004 * rng.standard_normal(n)))
    volumes = rng.uniform(1000, 5000, n)
    return Dataset(
        asset=asset,
        dates=make_dates(n),
        columns={
            "open": opens,
            "high": highs,
            "low": lows,
            "close": closes,
            "volume": volumes,
        },
    )


@pytest.fixture(scope="session")
def fixture_dataset():
    bars = load_ohlcv_csv(FIXTURE_DIR / "synthcoin_ohlcv.csv")
    exo = merge_exogenous(
        load_exogenous_csv(FIXTURE_DIR / "macro.csv"),
        load_exogenous_csv(FIXTURE_DIR / "synthcoin_tweets.csv"),
    )
    return align_calendar(bars, exo, asset="synthcoin")


@pytest.fixture(scope="session")
def fixture_config_path():
    return FIXTURE_DIR / "fixture.toml"
