"""Regenerate the bundled synthetic fixture deterministically.

Run from the repository root: ``python3 fixtures/generate.py``. The fixture
is a 200-day market whose next-day direction is 90% predictable from the
tweet-count column, plus a weekday-only macro file. The generator seed was
chosen so that the test split drifts downward, keeping signal-blind
strategies unprofitable there.
"""

import csv
from datetime import date, timedelta
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
N_DAYS = 200
SEED = 20240109


def main() -> None:
    rng = np.random.default_rng(SEED)
    dates = [date(2021, 1, 1) + timedelta(days=i) for i in range(N_DAYS)]

    signal = rng.integers(0, 2, N_DAYS)
    direction = np.where(rng.random(N_DAYS) < 0.90, signal, 1 - signal)
    rets = np.where(direction == 1, 0.015, -0.015) + rng.normal(0, 0.003, N_DAYS)
    closes = 100.0 * np.cumprod(np.concatenate([[1.0], 1.0 + rets[:-1]]))
    opens = closes * (1.0 + rng.normal(0, 0.002, N_DAYS))
    highs = np.maximum(opens, closes) * (1.0 + np.abs(rng.normal(0, 0.004, N_DAYS)))
    lows = np.minimum(opens, closes) * (1.0 - np.abs(rng.normal(0, 0.004, N_DAYS)))
    volumes = rng.uniform(1000, 5000, N_DAYS)

    with open(HERE / "synthcoin_ohlcv.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "open", "high", "low", "close", "volume"])
        for i, d in enumerate(dates):
            w.writerow(
                [d.isoformat()]
                + [f"{v:.6f}" for v in (opens[i], highs[i], lows[i], closes[i], volumes[i])]
            )

    with open(HERE / "synthcoin_tweets.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "tweet_count"])
        for i, d in enumerate(dates):
            w.writerow([d.isoformat(), int(10 + 100 * signal[i] + rng.integers(0, 5))])

    gold = 1800.0 + np.cumsum(rng.normal(0, 4, N_DAYS))
    msci = 2100.0 + np.cumsum(rng.normal(0, 6, N_DAYS))
    sp500 = 3800.0 + np.cumsum(rng.normal(0, 10, N_DAYS))
    usdx = 92.0 + np.cumsum(rng.normal(0, 0.1, N_DAYS))
    wti = 52.0 + np.cumsum(rng.normal(0, 0.6, N_DAYS))
    with open(HERE / "macro.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "gold", "msci", "sp500", "usdx", "wti"])
        for i, d in enumerate(dates):
            if d.weekday() >= 5:  # macro markets closed on weekends
                continue
            w.writerow(
                [d.isoformat()]
                + [f"{v:.4f}" for v in (gold[i], msci[i], sp500[i], usdx[i], wti[i])]
            )


if __name__ == "__main__":
    main()
