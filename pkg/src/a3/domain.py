"""Shared domain types for the event-alignment engine.

All values are immutable after construction and carry no I/O. Day
arithmetic is done on trading-day ordinals (an index into the owning
TradingCalendar), never on calendar dates: outcome events only exist on
days the exchange is open, so "the day after" always means the next
trading day. Monetary quantities are fixed-point decimals with four
fractional digits; labeling never compares binary floats.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Mapping, Optional

from .errors import CalendarMismatch, LastDayError, ValidationError

MONEY_EXP = Decimal("0.0001")


def money(value) -> Decimal:
    """Parse a monetary amount into the canonical 4-decimal fixed point."""
    try:
        d = Decimal(str(value))
    except InvalidOperation as exc:
        raise ValidationError(f"not a decimal amount: {value!r}") from exc
    if not d.is_finite():
        raise ValidationError(f"non-finite amount: {value!r}")
    return d.quantize(MONEY_EXP)


def money_str(value: Decimal) -> str:
    """Canonical wire form of a monetary amount ("123.4500")."""
    return format(value.quantize(MONEY_EXP), "f")


class Task(Enum):
    TIMING = "timing"
    VIEW = "view"
    TRADING = "trading"


class TimingLabel(Enum):
    RELEASE_REPORT = "ReleaseReport"
    NOT_RELEASE_REPORT = "NotReleaseReport"


class ViewLabel(Enum):
    UPGRADE = "Upgrade"
    DOWNGRADE = "Downgrade"
    KEEP = "Keep"


class TradingLabel(Enum):
    OVERWEIGHT = "Overweight"
    UNDERWEIGHT = "Underweight"
    NO_ACTION = "NoAction"


# Alternate spellings used by some vendor tables for the same classes.
TRADING_ALIAS = {
    TradingLabel.OVERWEIGHT: "Overbuy",
    TradingLabel.UNDERWEIGHT: "Oversell",
    TradingLabel.NO_ACTION: "NoAction",
}


class ExclusionReason(Enum):
    NO_NEXT_DAY = "NO_NEXT_DAY"
    MISSING_PT = "MISSING_PT"
    TIE = "TIE"


@dataclass(frozen=True, order=True)
class StockId:
    """Exchange ticker, canonicalized (trimmed, upper-cased) at construction."""

    code: str

    def __post_init__(self):
        canonical = self.code.strip().upper()
        if not canonical:
            raise ValidationError("stock code must be non-empty")
        if not canonical.isalnum():
            raise ValidationError(f"stock code must be alphanumeric: {self.code!r}")
        object.__setattr__(self, "code", canonical)

    def __str__(self) -> str:
        return self.code


@dataclass(frozen=True, order=True)
class TradingDay:
    """A single trading day: its ordinal within the calendar plus its date."""

    ordinal: int
    date: dt.date

    def __str__(self) -> str:
        return self.date.isoformat()


class TradingCalendar:
    """Ordered trading days; the sole authority for day arithmetic."""

    def __init__(self, dates: list[dt.date]):
        if not dates:
            raise ValidationError("calendar must contain at least one day")
        for prev, cur in zip(dates, dates[1:]):
            if cur <= prev:
                raise ValidationError(f"calendar dates not strictly ascending at {cur}")
        self._days = tuple(TradingDay(i, d) for i, d in enumerate(dates))
        self._by_date = {d: day for day, d in zip(self._days, dates)}

    def __len__(self) -> int:
        return len(self._days)

    def __iter__(self):
        return iter(self._days)

    def __eq__(self, other) -> bool:
        return isinstance(other, TradingCalendar) and self._days == other._days

    def __contains__(self, date: dt.date) -> bool:
        return date in self._by_date

    def day(self, date: dt.date) -> TradingDay:
        try:
            return self._by_date[date]
        except KeyError:
            raise CalendarMismatch(f"{date.isoformat()} is not a trading day") from None

    def by_ordinal(self, ordinal: int) -> TradingDay:
        if not 0 <= ordinal < len(self._days):
            raise CalendarMismatch(f"ordinal {ordinal} outside calendar of {len(self._days)} days")
        return self._days[ordinal]

    def owns(self, day: TradingDay) -> bool:
        return 0 <= day.ordinal < len(self._days) and self._days[day.ordinal] == day

    def first(self) -> TradingDay:
        return self._days[0]

    def last(self) -> TradingDay:
        return self._days[-1]

    def resolve_or_after(self, date: dt.date) -> Optional[TradingDay]:
        """The trading day on `date`, or the next one after it; None if past the end."""
        if date in self._by_date:
            return self._by_date[date]
        for day in self._days:
            if day.date > date:
                return day
        return None


def next_trading_day(day: TradingDay, calendar: TradingCalendar) -> TradingDay:
    """Successor of `day` by ordinal within `calendar`."""
    if not calendar.owns(day):
        raise CalendarMismatch(f"{day} (ordinal {day.ordinal}) not in calendar")
    if day.ordinal == len(calendar) - 1:
        raise LastDayError(f"{day} is the final calendar day")
    return calendar.by_ordinal(day.ordinal + 1)


@dataclass(frozen=True)
class NewsItem:
    """One news article aligned to one stock on one trading day.

    Articles mentioning several stocks are split into per-stock copies at
    ingestion, so (id, stock) is the unique key.
    """

    id: str
    stock: StockId
    day: TradingDay
    headline: str
    body: str

    def __post_init__(self):
        if not self.id:
            raise ValidationError("news id must be non-empty")
        if not self.body:
            raise ValidationError(f"news {self.id}: body must be non-empty")

    def sort_key(self):
        return (self.stock, self.day.ordinal, self.id)


@dataclass(frozen=True)
class ReportEvent:
    """Presence of an analysis report for (stock, day) by one analyst."""

    stock: StockId
    day: TradingDay
    analyst_id: str

    def sort_key(self):
        return (self.stock, self.day.ordinal, self.analyst_id)


@dataclass(frozen=True)
class PriceTargetSnapshot:
    """Averaged analyst price target for a stock on a day (at most one per day)."""

    stock: StockId
    day: TradingDay
    avg_price_target: Decimal

    def __post_init__(self):
        object.__setattr__(self, "avg_price_target", money(self.avg_price_target))
        if self.avg_price_target <= 0:
            raise ValidationError(
                f"price target for {self.stock} on {self.day} must be positive"
            )

    def sort_key(self):
        return (self.stock, self.day.ordinal)


@dataclass(frozen=True)
class TradeRecord:
    """One institution's aggregate buy/sell amounts for a stock on a day."""

    stock: StockId
    day: TradingDay
    institution_id: str
    buy_amount: Decimal
    sell_amount: Decimal

    def __post_init__(self):
        object.__setattr__(self, "buy_amount", money(self.buy_amount))
        object.__setattr__(self, "sell_amount", money(self.sell_amount))
        if self.buy_amount < 0 or self.sell_amount < 0:
            raise ValidationError(
                f"trade amounts for {self.stock} on {self.day} must be non-negative"
            )

    def sort_key(self):
        return (
            self.stock,
            self.day.ordinal,
            self.institution_id,
            self.buy_amount,
            self.sell_amount,
        )


@dataclass(frozen=True)
class WindowConfig:
    """News window length in trading days preceding the anchor day."""

    T: int = 5

    def __post_init__(self):
        if self.T < 0:
            raise ValidationError(f"window T must be >= 0, got {self.T}")


@dataclass(frozen=True)
class Instance:
    """A (stock, anchor day t) candidate with its news window and task labels.

    The window holds every news item for the stock in [t-T, t], sorted by
    (day, id), and always contains at least one day-t item. A task slot is
    either labeled or excluded, never both.
    """

    stock: StockId
    anchor_day: TradingDay
    window: tuple[NewsItem, ...]
    timing_label: Optional[TimingLabel] = None
    view_label: Optional[ViewLabel] = None
    trading_label: Optional[TradingLabel] = None
    exclusions: Mapping[Task, ExclusionReason] = field(default_factory=dict)

    def __post_init__(self):
        if not self.window:
            raise ValidationError(f"instance {self.key()}: window must be non-empty")
        if all(item.day != self.anchor_day for item in self.window):
            raise ValidationError(f"instance {self.key()}: no news on anchor day")
        for item in self.window:
            if item.stock != self.stock:
                raise ValidationError(
                    f"instance {self.key()}: window item {item.id} has foreign stock"
                )
        keys = [(i.day.ordinal, i.id) for i in self.window]
        if keys != sorted(keys):
            raise ValidationError(f"instance {self.key()}: window not sorted by (day, id)")
        for task, label in (
            (Task.TIMING, self.timing_label),
            (Task.VIEW, self.view_label),
            (Task.TRADING, self.trading_label),
        ):
            if label is not None and task in self.exclusions:
                raise ValidationError(
                    f"instance {self.key()}: {task.value} both labeled and excluded"
                )

    def key(self) -> str:
        return f"{self.stock}@{self.anchor_day.date.isoformat()}"

    def label_for(self, task: Task):
        return {
            Task.TIMING: self.timing_label,
            Task.VIEW: self.view_label,
            Task.TRADING: self.trading_label,
        }[task]

    def window_text(self) -> str:
        """Full window text (headline + body per item), oldest first."""
        return "\n".join(f"{i.headline}\n{i.body}" for i in self.window)


@dataclass(frozen=True)
class LabeledDataset:
    """Instances plus a train/dev/test partition of one task view.

    splits maps split name to instance indices; together the splits cover
    exactly the instances labeled for the task recorded in `config`.
    """

    instances: tuple[Instance, ...]
    splits: Mapping[str, tuple[int, ...]]
    seed: int
    config: Mapping[str, object]

    def __post_init__(self):
        seen: set[int] = set()
        for name, idxs in self.splits.items():
            for i in idxs:
                if i in seen:
                    raise ValidationError(f"instance index {i} repeats across splits")
                if not 0 <= i < len(self.instances):
                    raise ValidationError(f"split {name}: index {i} out of range")
                seen.add(i)

    def split_instances(self, name: str) -> list[Instance]:
        return [self.instances[i] for i in self.splits[name]]
