"""Loading, alignment, and chronological splitting of daily market data.

Each coin is represented by a calendar-indexed :class:`Dataset` combining
OHLCV bars with macro-financial levels and daily tweet counts. Crypto trades
every day while the macro markets do not, so exogenous series are
forward-filled onto the crypto calendar (leading gaps back-filled).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, datetime

import numpy as np

TRAIN_FRACTION = 0.67

OHLCV_COLUMNS = ("open", "high", "low", "close", "volume")
MACRO_COLUMNS = ("gold", "msci", "sp500", "usdx", "wti")
TWEET_COLUMN = "tweet_count"


class MarketDataError(Exception):
    """Base class for data loading/validation failures."""


class ParseError(MarketDataError):
    """Malformed row in an input file; carries the 1-based line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


class OrderingError(MarketDataError):
    """Dates out of order or duplicated."""


class MissingDataError(MarketDataError):
    """A required exogenous column has no usable values."""


class LookupError_(MarketDataError):
    """Unknown column name."""


@dataclass(frozen=True)
class Bar:
    """One daily OHLCV record for one asset."""

    date: date
    open: float
    high: float
    low: float
    close: float
    volume: float

    def __post_init__(self):
        if self.low > min(self.open, self.close) + 1e-9:
            raise ValueError(f"{self.date}: low {self.low} above open/close")
        if self.high < max(self.open, self.close) - 1e-9:
            raise ValueError(f"{self.date}: high {self.high} below open/close")
        if self.low > self.high:
            raise ValueError(f"{self.date}: low {self.low} > high {self.high}")
        if self.volume < 0:
            raise ValueError(f"{self.date}: negative volume")


@dataclass(frozen=True)
class ExogenousRecord:
    """Macro levels and tweet count for one calendar day.

    Missing values are represented as ``None`` (e.g. macro markets closed,
    or a file that only carries a subset of columns).
    """

    date: date
    gold: float | None = None
    msci: float | None = None
    sp500: float | None = None
    usdx: float | None = None
    wti: float | None = None
    tweet_count: int | None = None

    def __post_init__(self):
        if self.tweet_count is not None and self.tweet_count < 0:
            raise ValueError(f"{self.date}: negative tweet count")
        for name in MACRO_COLUMNS:
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{self.date}: non-positive {name} level")


@dataclass
class Dataset:
    """Calendar-aligned column store for one asset.

    ``columns`` maps a column name to a float array of the same length as
    ``dates``. The train/test boundary is derived, never stored.
    """

    asset: str
    dates: list[date]
    columns: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.dates)
        for name, col in self.columns.items():
            self.columns[name] = np.asarray(col, dtype=float)
            if len(self.columns[name]) != n:
                raise ValueError(f"column {name!r} length mismatch")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise OrderingError(f"{self.asset}: dates not strictly increasing")

    def __len__(self):
        return len(self.dates)

    @property
    def split_index(self) -> int:
        return math.floor(TRAIN_FRACTION * len(self))

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise LookupError_(f"unknown column {name!r}")
        return self.columns[name]

    def slice(self, start: int, stop: int) -> "Dataset":
        return Dataset(
            asset=self.asset,
            dates=self.dates[start:stop],
            columns={k: v[start:stop].copy() for k, v in self.columns.items()},
        )

    def to_csv(self, path) -> None:
        names = sorted(self.columns)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date"] + names)
            for i, d in enumerate(self.dates):
                writer.writerow([d.isoformat()] + [repr(float(self.columns[c][i])) for c in names])

    @classmethod
    def from_csv(cls, path, asset: str) -> "Dataset":
        rows = _read_rows(path)
        if not rows:
            return cls(asset=asset, dates=[], columns={})
        names = [c for c in rows[0] if c != "date"]
        dates = []
        cols: dict[str, list] = {c: [] for c in names}
        for line_no, row in enumerate(rows, start=2):
            dates.append(_parse_date(path, line_no, row["date"]))
            for c in names:
                cols[c].append(float(row[c]))
        return cls(asset=asset, dates=dates, columns={c: np.array(v) for c, v in cols.items()})


def _parse_date(path, line_no, text) -> date:
    try:
        return datetime.strptime(text.strip(), "%Y-%m-%d").date()
    except ValueError as exc:
        raise ParseError(path, line_no, f"bad date {text!r}: {exc}") from None


def _parse_float(path, line_no, name, text) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(path, line_no, f"bad value for {name!r}: {text!r}") from None


def _read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(path, 1, "missing header row")
        return list(reader)


def load_ohlcv_csv(path) -> list[Bar]:
    """Load a ``date,open,high,low,close,volume`` CSV into sorted bars.

    Rows must already be in strictly increasing date order; duplicates and
    non-monotone dates are rejected rather than silently reordered.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"date", "open", "high", "low", "close", "volume"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ParseError(path, 1, f"header must name {sorted(required)}")
        bars: list[Bar] = []
        for line_no, row in enumerate(reader, start=2):
            d = _parse_date(path, line_no, row["date"])
            try:
                bar = Bar(
                    date=d,
                    open=_parse_float(path, line_no, "open", row["open"]),
                    high=_parse_float(path, line_no, "high", row["high"]),
                    low=_parse_float(path, line_no, "low", row["low"]),
                    close=_parse_float(path, line_no, "close", row["close"]),
                    volume=_parse_float(path, line_no, "volume", row["volume"]),
                )
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from None
            if bars and bar.date <= bars[-1].date:
                raise OrderingError(f"{path}:{line_no}: date {bar.date} not after {bars[-1].date}")
            bars.append(bar)
    return bars


def load_exogenous_csv(path) -> list[ExogenousRecord]:
    """Load macro and/or tweet-count records; absent columns stay ``None``."""
    rows = _read_rows(path)
    records = []
    for line_no, row in enumerate(rows, start=2):
        d = _parse_date(path, line_no, row["date"])
        kwargs = {}
        for name in MACRO_COLUMNS:
            if row.get(name) not in (None, ""):
                kwargs[name] = _parse_float(path, line_no, name, row[name])
        if row.get(TWEET_COLUMN) not in (None, ""):
            kwargs[TWEET_COLUMN] = int(float(row[TWEET_COLUMN]))
        records.append(ExogenousRecord(date=d, **kwargs))
    records.sort(key=lambda r: r.date)
    return records


def merge_exogenous(*series: list[ExogenousRecord]) -> list[ExogenousRecord]:
    """Merge per-file exogenous records (e.g. macro file + tweets file) by date."""
    by_date: dict[date, dict] = {}
    for records in series:
        for rec in records:
            slot = by_date.setdefault(rec.date, {})
            for name in MACRO_COLUMNS + (TWEET_COLUMN,):
                v = getattr(rec, name)
                if v is not None:
                    slot[name] = v
    return [ExogenousRecord(date=d, **vals) for d, vals in sorted(by_date.items())]


def align_calendar(
    bars: list[Bar],
    exo: list[ExogenousRecord],
    asset: str = "asset",
    required: tuple[str, ...] = (),
) -> Dataset:
    """Align exogenous series onto the crypto trading calendar.

    Missing exogenous values are forward-filled from the last available
    observation; leading gaps take the first available value. ``required``
    columns must have at least one observation.
    """
    if not bars:
        raise MarketDataError("no bars to align")
    dates = [b.date for b in bars]
    columns = {
        "open": np.array([b.open for b in bars]),
        "high": np.array([b.high for b in bars]),
        "low": np.array([b.low for b in bars]),
        "close": np.array([b.close for b in bars]),
        "volume": np.array([b.volume for b in bars]),
    }

    exo_sorted = sorted(exo, key=lambda r: r.date)
    exo_dates = [r.date for r in exo_sorted]
    for name in MACRO_COLUMNS + (TWEET_COLUMN,):
        values = [getattr(r, name) for r in exo_sorted]
        observed = [(d, v) for d, v in zip(exo_dates, values) if v is not None]
        if not observed:
            if name in required:
                raise MissingDataError(f"{asset}: required column {name!r} entirely empty")
            continue
        obs_dates = [d for d, _ in observed]
        obs_values = [v for _, v in observed]
        filled = np.empty(len(dates))
        j = -1
        for i, d in enumerate(dates):
            while j + 1 < len(obs_dates) and obs_dates[j + 1] <= d:
                j += 1
            filled[i] = obs_values[max(j, 0)]  # leading gap -> first available
        columns[name] = filled
    return Dataset(asset=asset, dates=dates, columns=columns)


def split_train_test(ds: Dataset) -> tuple[Dataset, Dataset]:
    """Chronological 67/33 split: first floor(0.67 n) rows train, rest test."""
    n = len(ds)
    if n < 3:
        raise MarketDataError(f"dataset too small to split (n={n})")
    k = ds.split_index
    return ds.slice(0, k), ds.slice(k, n)


def summary_stats(ds: Dataset, column: str) -> dict[str, float]:
    """Descriptive statistics (population std) for one column."""
    values = ds.column(column)
    return {
        "mean": float(np.mean(values)),
        "std": float(np.std(values)),
        "min": float(np.min(values)),
        "median": float(np.median(values)),
        "max": float(np.max(values)),
    }
