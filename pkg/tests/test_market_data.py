"""Loading, alignment, splitting, and round-trip serialization."""

import math
from datetime import date

import numpy as np
import pytest

from crn.market_data import (
    Bar,
    Dataset,
    ExogenousRecord,
    MissingDataError,
    OrderingError,
    ParseError,
    align_calendar,
    load_exogenous_csv,
    load_ohlcv_csv,
    merge_exogenous,
    split_train_test,
    summary_stats,
)
from tests.conftest import make_dates, make_price_dataset


def write(path, text):
    path.write_text(text)
    return path


class TestLoadOhlcv:
    def test_loads_valid_file(self, tmp_path):
        p = write(
            tmp_path / "ok.csv",
            "date,open,high,low,close,volume\n"
            "2021-01-01,10,11,9,10.5,100\n"
            "2021-01-02,10.5,12,10,11,200\n",
        )
        bars = load_ohlcv_csv(p)
        assert len(bars) == 2
        assert bars[0].date == date(2021, 1, 1)
        assert bars[1].close == 11

    def test_rejects_bad_header(self, tmp_path):
        p = write(tmp_path / "bad.csv", "date,open,close\n2021-01-01,1,2\n")
        with pytest.raises(ParseError):
            load_ohlcv_csv(p)

    def test_rejects_bad_value_with_line_number(self, tmp_path):
        p = write(
            tmp_path / "bad.csv",
            "date,open,high,low,close,volume\n2021-01-01,10,11,9,oops,100\n",
        )
        with pytest.raises(ParseError) as err:
            load_ohlcv_csv(p)
        assert err.value.line_no == 2

    def test_rejects_duplicate_and_unordered_dates(self, tmp_path):
        dup = write(
            tmp_path / "dup.csv",
            "date,open,high,low,close,volume\n"
            "2021-01-02,10,11,9,10,1\n2021-01-02,10,11,9,10,1\n",
        )
        with pytest.raises(OrderingError):
            load_ohlcv_csv(dup)
        rev = write(
            tmp_path / "rev.csv",
            "date,open,high,low,close,volume\n"
            "2021-01-02,10,11,9,10,1\n2021-01-01,10,11,9,10,1\n",
        )
        with pytest.raises(OrderingError):
            load_ohlcv_csv(rev)

    def test_rejects_inconsistent_bar(self, tmp_path):
        p = write(
            tmp_path / "bad.csv",
            "date,open,high,low,close,volume\n2021-01-01,10,9.5,9,10,1\n",
        )
        with pytest.raises(ParseError):
            load_ohlcv_csv(p)


class TestExogenous:
    def test_partial_columns_stay_none(self, tmp_path):
        p = write(tmp_path / "tw.csv", "date,tweet_count\n2021-01-01,42\n")
        recs = load_exogenous_csv(p)
        assert recs[0].tweet_count == 42
        assert recs[0].gold is None

    def test_merge_combines_by_date(self, tmp_path):
        macro = load_exogenous_csv(
            write(tmp_path / "m.csv", "date,gold,wti\n2021-01-01,1800,52\n")
        )
        tweets = load_exogenous_csv(
            write(tmp_path / "t.csv", "date,tweet_count\n2021-01-01,7\n2021-01-02,9\n")
        )
        merged = merge_exogenous(macro, tweets)
        assert len(merged) == 2
        assert merged[0].gold == 1800 and merged[0].tweet_count == 7
        assert merged[1].gold is None and merged[1].tweet_count == 9

    def test_negative_tweet_count_rejected(self):
        with pytest.raises(ValueError):
            ExogenousRecord(date=date(2021, 1, 1), tweet_count=-1)


class TestAlignCalendar:
    def bars(self, n=5):
        return [
            Bar(date=d, open=10, high=11, low=9, close=10, volume=1)
            for d in make_dates(n)
        ]

    def test_forward_fill_weekend_gap(self):
        # macro observed on days 0 and 3 only; days 1-2 carry day 0's value
        exo = [
            ExogenousRecord(date=date(2021, 1, 1), gold=1800.0),
            ExogenousRecord(date=date(2021, 1, 4), gold=1850.0),
        ]
        ds = align_calendar(self.bars(5), exo)
        assert ds.column("gold").tolist() == [1800, 1800, 1800, 1850, 1850]

    def test_leading_gap_backfills_first_value(self):
        exo = [ExogenousRecord(date=date(2021, 1, 3), wti=50.0)]
        ds = align_calendar(self.bars(4), exo)
        assert ds.column("wti").tolist() == [50, 50, 50, 50]

    def test_required_empty_column_raises(self):
        with pytest.raises(MissingDataError):
            align_calendar(self.bars(3), [], required=("gold",))

    def test_absent_optional_column_omitted(self):
        ds = align_calendar(self.bars(3), [])
        assert "gold" not in ds.columns
        assert set(ds.columns) == {"open", "high", "low", "close", "volume"}


class TestSplit:
    @pytest.mark.parametrize("n", [3, 10, 100, 1945])
    def test_split_sizes(self, n):
        ds = make_price_dataset(n=n)
        train, test = split_train_test(ds)
        assert len(train) == math.floor(0.67 * n)
        assert len(train) + len(test) == n

    def test_split_is_chronological(self):
        ds = make_price_dataset(n=30)
        train, test = split_train_test(ds)
        assert train.dates[-1] < test.dates[0]
        np.testing.assert_array_equal(
            np.concatenate([train.column("close"), test.column("close")]),
            ds.column("close"),
        )


class TestDatasetRoundTrip:
    def test_csv_round_trip_is_exact(self, tmp_path):
        ds = make_price_dataset(n=40, seed=3)
        path = tmp_path / "ds.csv"
        ds.to_csv(path)
        back = Dataset.from_csv(path, asset=ds.asset)
        assert back.dates == ds.dates
        for name in ds.columns:
            np.testing.assert_array_equal(back.column(name), ds.column(name))

    def test_double_write_is_byte_identical(self, tmp_path):
        ds = make_price_dataset(n=25, seed=9)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        ds.to_csv(a)
        ds.to_csv(b)
        assert a.read_bytes() == b.read_bytes()


def test_summary_stats_population_std():
    ds = make_price_dataset(n=50, seed=1)
    stats = summary_stats(ds, "close")
    closes = ds.column("close")
    assert stats["mean"] == pytest.approx(np.mean(closes))
    assert stats["std"] == pytest.approx(np.std(closes))  # population, not sample
    assert stats["min"] <= stats["median"] <= stats["max"]
