"""Technical indicators and feature-frame assembly.

All indicator functions are causal recurrences over numpy arrays. Warm-up
rows (where a value is not yet defined) are NaN; :class:`FeatureFrame`
carries an explicit mask so downstream fitting can exclude them instead of
consuming zero-filled placeholders.

Windows follow the standard defaults used throughout: SMA/EMA 10, RSI 14,
NATR 14, Stochastic 14 (%D smoothing 3), Bollinger 5 with 2 standard
deviations, MACD 12/26/9.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .market_data import Dataset, MACRO_COLUMNS, OHLCV_COLUMNS, TWEET_COLUMN

SMA_WINDOW = 10
EMA_WINDOW = 10
RSI_WINDOW = 14
NATR_WINDOW = 14
STOCH_WINDOW = 14
STOCH_SMOOTH = 3
BBANDS_WINDOW = 5
BBANDS_K = 2.0
MACD_FAST = 12
MACD_SLOW = 26
MACD_SIGNAL = 9

FEATURE_GROUPS = ("OHLCV", "OHLCV+TI", "OHLCV+MACRO+TWEETS", "ALL")

# The ten indicator columns appended for the "+TI" groups. Bollinger bands
# and the stochastic oscillator produce multiple outputs; only one column of
# each multi-output indicator is counted here so the OHLCV+TI group carries
# exactly 15 columns.
TI_COLUMNS = (
    "ad",
    "obv",
    "ema",
    "sma",
    "rsi",
    "natr",
    "macd",
    "bb_middle",
    "bb_width",
    "stoch_k",
)
EXOGENOUS_COLUMNS = MACRO_COLUMNS + (TWEET_COLUMN,)


class FeatureError(Exception):
    """Feature-frame construction failure (unknown group, shape mismatch)."""


@dataclass
class FeatureFrame:
    """Date-aligned matrix of named feature columns with a warm-up mask.

    ``mask[i]`` is True when row ``i`` contains at least one undefined
    (warm-up) value and must be excluded from fitting.
    """

    dates: list
    columns: dict[str, np.ndarray]
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.dates)
        for name, col in self.columns.items():
            if len(col) != n:
                raise FeatureError(f"column {name!r} length mismatch")
        if self.mask is None:
            stacked = np.column_stack(list(self.columns.values())) if self.columns else np.empty((n, 0))
            self.mask = np.isnan(stacked).any(axis=1)

    def __len__(self):
        return len(self.dates)

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def matrix(self) -> np.ndarray:
        return np.column_stack([self.columns[c] for c in self.columns])

    def to_csv(self, path) -> None:
        names = self.names
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date"] + names + ["mask"])
            for i, d in enumerate(self.dates):
                row = [d.isoformat()] + [repr(float(self.columns[c][i])) for c in names]
                row.append(int(self.mask[i]))
                writer.writerow(row)


def sma(series, window: int = SMA_WINDOW) -> np.ndarray:
    """Simple moving average; NaN for the first ``window - 1`` rows."""
    x = np.asarray(series, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    out = np.full(len(x), np.nan)
    if len(x) >= window:
        csum = np.concatenate(([0.0], np.cumsum(x)))
        out[window - 1 :] = (csum[window:] - csum[:-window]) / window
    return out


def ema(series, window: int = EMA_WINDOW) -> np.ndarray:
    """Exponential moving average seeded with the SMA of the first window."""
    x = np.asarray(series, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    out = np.full(len(x), np.nan)
    if len(x) < window:
        return out
    k = 2.0 / (window + 1)
    out[window - 1] = np.mean(x[:window])
    for t in range(window, len(x)):
        out[t] = k * x[t] + (1 - k) * out[t - 1]
    return out


def _wilder_smooth(values: np.ndarray, window: int) -> np.ndarray:
    """Wilder recursive average: seed with the plain mean, then
    avg_t = (avg_{t-1} * (window - 1) + x_t) / window."""
    out = np.full(len(values), np.nan)
    if len(values) < window:
        return out
    out[window - 1] = np.mean(values[:window])
    for t in range(window, len(values)):
        out[t] = (out[t - 1] * (window - 1) + values[t]) / window
    return out


def rsi(closes, window: int = RSI_WINDOW) -> np.ndarray:
    """Relative strength index with Wilder smoothing, in [0, 100]."""
    x = np.asarray(closes, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    out = np.full(len(x), np.nan)
    if len(x) < window + 1:
        return out
    delta = np.diff(x)
    gains = np.where(delta > 0, delta, 0.0)
    losses = np.where(delta < 0, -delta, 0.0)
    avg_gain = _wilder_smooth(gains, window)
    avg_loss = _wilder_smooth(losses, window)
    for t in range(window - 1, len(delta)):
        if avg_loss[t] == 0.0:
            out[t + 1] = 100.0 if avg_gain[t] > 0 else 50.0
        else:
            rs = avg_gain[t] / avg_loss[t]
            out[t + 1] = 100.0 - 100.0 / (1.0 + rs)
    return out


def macd(closes, fast: int = MACD_FAST, slow: int = MACD_SLOW, signal: int = MACD_SIGNAL):
    """MACD line (EMA fast - EMA slow), signal line, and histogram."""
    if fast >= slow:
        raise ValueError("fast period must be shorter than slow period")
    x = np.asarray(closes, dtype=float)
    line = ema(x, fast) - ema(x, slow)
    defined = ~np.isnan(line)
    sig = np.full(len(x), np.nan)
    if defined.any():
        start = int(np.argmax(defined))
        sig[start:] = ema(line[start:], signal)
    return line, sig, line - sig


def obv(closes, volumes) -> np.ndarray:
    """On-balance volume; starts at 0, ties add nothing."""
    c = np.asarray(closes, dtype=float)
    v = np.asarray(volumes, dtype=float)
    if len(c) != len(v):
        raise FeatureError("closes and volumes must have equal length")
    out = np.zeros(len(c))
    if len(c):
        signs = np.sign(np.diff(c))
        out[1:] = np.cumsum(signs * v[1:])
    return out


def ad_line(highs, lows, closes, volumes) -> np.ndarray:
    """Accumulation/distribution line (cumulative money-flow volume)."""
    h = np.asarray(highs, dtype=float)
    l = np.asarray(lows, dtype=float)
    c = np.asarray(closes, dtype=float)
    v = np.asarray(volumes, dtype=float)
    span = h - l
    mfm = np.where(span > 0, ((c - l) - (h - c)) / np.where(span > 0, span, 1.0), 0.0)
    return np.cumsum(mfm * v)


def bbands(closes, window: int = BBANDS_WINDOW, k: float = BBANDS_K):
    """Bollinger bands: (upper, middle, lower, width); middle is the SMA."""
    x = np.asarray(closes, dtype=float)
    middle = sma(x, window)
    std = np.full(len(x), np.nan)
    for t in range(window - 1, len(x)):
        std[t] = np.std(x[t - window + 1 : t + 1])
    upper = middle + k * std
    lower = middle - k * std
    return upper, middle, lower, upper - lower


def natr(highs, lows, closes, window: int = NATR_WINDOW) -> np.ndarray:
    """Normalised average true range: 100 * Wilder-ATR / close."""
    h = np.asarray(highs, dtype=float)
    l = np.asarray(lows, dtype=float)
    c = np.asarray(closes, dtype=float)
    out = np.full(len(c), np.nan)
    if len(c) < window + 1:
        return out
    prev_close = c[:-1]
    tr = np.maximum(h[1:] - l[1:], np.maximum(np.abs(h[1:] - prev_close), np.abs(l[1:] - prev_close)))
    atr = _wilder_smooth(tr, window)
    out[1:] = 100.0 * atr / c[1:]
    return out


def stoch(highs, lows, closes, window: int = STOCH_WINDOW, smooth: int = STOCH_SMOOTH):
    """Stochastic oscillator: raw %K over ``window`` and %D = SMA(%K, smooth)."""
    h = np.asarray(highs, dtype=float)
    l = np.asarray(lows, dtype=float)
    c = np.asarray(closes, dtype=float)
    k_line = np.full(len(c), np.nan)
    for t in range(window - 1, len(c)):
        hh = np.max(h[t - window + 1 : t + 1])
        ll = np.min(l[t - window + 1 : t + 1])
        k_line[t] = 50.0 if hh == ll else 100.0 * (c[t] - ll) / (hh - ll)
    defined = ~np.isnan(k_line)
    d_line = np.full(len(c), np.nan)
    if defined.any():
        start = int(np.argmax(defined))
        d_line[start:] = sma(k_line[start:], smooth)
    return k_line, d_line


def group_columns(group: str) -> list[str]:
    """Column names for one of the four feature groups."""
    if group == "OHLCV":
        return list(OHLCV_COLUMNS)
    if group == "OHLCV+TI":
        return list(OHLCV_COLUMNS) + list(TI_COLUMNS)
    if group == "OHLCV+MACRO+TWEETS":
        return list(OHLCV_COLUMNS) + list(EXOGENOUS_COLUMNS)
    if group == "ALL":
        return list(OHLCV_COLUMNS) + list(TI_COLUMNS) + list(EXOGENOUS_COLUMNS)
    raise FeatureError(f"unknown feature group {group!r}; expected one of {FEATURE_GROUPS}")


def compute_feature_frame(ds: Dataset, group: str) -> FeatureFrame:
    """Assemble the named feature group for a dataset.

    Group sizes: OHLCV 5, OHLCV+TI 15, OHLCV+MACRO+TWEETS 11, ALL 21.
    """
    wanted = group_columns(group)
    closes = ds.column("close")
    highs = ds.column("high")
    lows = ds.column("low")
    volumes = ds.column("volume")

    derived: dict[str, np.ndarray] = {}
    if any(c in TI_COLUMNS for c in wanted):
        derived["ad"] = ad_line(highs, lows, closes, volumes)
        derived["obv"] = obv(closes, volumes)
        derived["ema"] = ema(closes)
        derived["sma"] = sma(closes)
        derived["rsi"] = rsi(closes)
        derived["natr"] = natr(highs, lows, closes)
        derived["macd"], _, _ = macd(closes)
        _, derived["bb_middle"], _, derived["bb_width"] = bbands(closes)
        derived["stoch_k"], _ = stoch(highs, lows, closes)

    columns: dict[str, np.ndarray] = {}
    for name in wanted:
        if name in derived:
            columns[name] = derived[name]
        else:
            columns[name] = np.asarray(ds.column(name), dtype=float)
    return FeatureFrame(dates=list(ds.dates), columns=columns)
