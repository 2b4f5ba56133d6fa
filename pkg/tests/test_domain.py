import datetime as dt
from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from a3.domain import (
    Instance,
    NewsItem,
    PriceTargetSnapshot,
    StockId,
    Task,
    TimingLabel,
    TradeRecord,
    TradingCalendar,
    WindowConfig,
    money,
    money_str,
    next_trading_day,
)
from a3.errors import CalendarMismatch, LastDayError, ValidationError


def _calendar(dates):
    return TradingCalendar([dt.date.fromisoformat(d) for d in dates])


class TestStockId:
    def test_canonicalizes(self):
        assert StockId(" tsm ").code == "TSM"
        assert StockId("2330").code == "2330"

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            StockId("   ")

    def test_rejects_non_alphanumeric(self):
        with pytest.raises(ValidationError):
            StockId("23 30")


class TestNextTradingDay:
    def test_weekend_skip(self):
        cal = _calendar(["2020-01-02", "2020-01-03", "2020-01-06"])
        friday = cal.day(dt.date(2020, 1, 3))
        assert next_trading_day(friday, cal).date == dt.date(2020, 1, 6)

    def test_ordinal_successor(self):
        dates = [dt.date(2020, 1, 1) + dt.timedelta(days=i) for i in range(50)]
        cal = TradingCalendar(dates)
        assert next_trading_day(cal.by_ordinal(41), cal).ordinal == 42

    def test_last_day(self):
        cal = _calendar(["2020-01-02", "2020-01-03"])
        with pytest.raises(LastDayError):
            next_trading_day(cal.last(), cal)

    def test_foreign_day(self):
        cal = _calendar(["2020-01-02", "2020-01-03"])
        other = _calendar(["2021-06-01", "2021-06-02", "2021-06-03"])
        with pytest.raises(CalendarMismatch):
            next_trading_day(other.by_ordinal(2), cal)

    @given(
        st.lists(
            st.dates(min_value=dt.date(2000, 1, 1), max_value=dt.date(2030, 1, 1)),
            min_size=2,
            max_size=40,
            unique=True,
        )
    )
    def test_injective_and_increasing(self, dates):
        cal = TradingCalendar(sorted(dates))
        successors = []
        for day in list(cal)[:-1]:
            nxt = next_trading_day(day, cal)
            assert nxt.date > day.date
            successors.append(nxt)
        assert len({d.ordinal for d in successors}) == len(successors)


class TestMoney:
    def test_quantizes_to_four_places(self):
        assert money("1.5") == Decimal("1.5000")
        assert money_str(money("100")) == "100.0000"
        assert money_str(money("0.00005")) == "0.0000"  # half-even

    def test_rejects_garbage(self):
        with pytest.raises(ValidationError):
            money("not-a-number")


class TestEventValidation:
    def test_positive_price_target(self):
        cal = _calendar(["2020-01-02"])
        with pytest.raises(ValidationError):
            PriceTargetSnapshot(StockId("A"), cal.by_ordinal(0), Decimal("0"))

    def test_non_negative_trade(self):
        cal = _calendar(["2020-01-02"])
        with pytest.raises(ValidationError):
            TradeRecord(StockId("A"), cal.by_ordinal(0), "i", Decimal("-1"), Decimal("0"))

    def test_news_body_required(self):
        cal = _calendar(["2020-01-02"])
        with pytest.raises(ValidationError):
            NewsItem("n1", StockId("A"), cal.by_ordinal(0), "h", "")


class TestInstance:
    def _item(self, cal, ordinal, news_id="n1", stock="A"):
        return NewsItem(news_id, StockId(stock), cal.by_ordinal(ordinal), "h", "b")

    def test_window_must_cover_anchor(self):
        cal = _calendar(["2020-01-02", "2020-01-03"])
        with pytest.raises(ValidationError):
            Instance(StockId("A"), cal.by_ordinal(1), (self._item(cal, 0),))

    def test_window_stock_must_match(self):
        cal = _calendar(["2020-01-02"])
        with pytest.raises(ValidationError):
            Instance(StockId("B"), cal.by_ordinal(0), (self._item(cal, 0, stock="A"),))

    def test_window_sorted(self):
        cal = _calendar(["2020-01-02", "2020-01-03"])
        items = (self._item(cal, 1, "n2"), self._item(cal, 0, "n1"))
        with pytest.raises(ValidationError):
            Instance(StockId("A"), cal.by_ordinal(1), items)

    def test_label_and_exclusion_conflict(self):
        from a3.domain import ExclusionReason

        cal = _calendar(["2020-01-02"])
        with pytest.raises(ValidationError):
            Instance(
                StockId("A"),
                cal.by_ordinal(0),
                (self._item(cal, 0),),
                timing_label=TimingLabel.RELEASE_REPORT,
                exclusions={Task.TIMING: ExclusionReason.NO_NEXT_DAY},
            )


def test_window_config_default_and_bounds():
    assert WindowConfig().T == 5
    with pytest.raises(ValidationError):
        WindowConfig(-1)


def test_calendar_rejects_disorder():
    with pytest.raises(ValidationError):
        _calendar(["2020-01-03", "2020-01-02"])
