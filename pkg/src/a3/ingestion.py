"""Parsing, validation, and normalization of the five input files.

All four event streams are JSON Lines, one object per line; the calendar
is one ISO date per line, strictly ascending. Decimals travel as strings
so round-trips are bit-exact. Text fields are treated as opaque Unicode
and only NFC-normalized. Loading is order-insensitive: any permutation of
input lines yields an identical Corpus.

Per-line problems are collected into a ValidationReport rather than
aborting the file; a corpus is accepted iff the report has no errors.
Records dated on non-trading days are shifted forward to the next trading
day when they are news (weekend news informs the next session) and
dropped with a warning for the other three streams (those events cannot
occur while the exchange is closed).
"""

from __future__ import annotations

import datetime as dt
import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .domain import (
    NewsItem,
    PriceTargetSnapshot,
    ReportEvent,
    StockId,
    TradeRecord,
    TradingCalendar,
    money,
    money_str,
)
from .errors import OrderError, ParseError, ValidationError

STREAM_KINDS = ("news", "reports", "price_targets", "trades")

STREAM_FIELDS = {
    "news": ("id", "stock", "date", "headline", "body"),
    "reports": ("stock", "date", "analyst_id"),
    "price_targets": ("stock", "date", "avg_price_target"),
    "trades": ("stock", "date", "institution_id", "buy_amount", "sell_amount"),
}


@dataclass
class ValidationReport:
    """Per-file findings; errors empty means the corpus is accepted."""

    errors: list[tuple[str, int, str, str]] = field(default_factory=list)
    warnings: list[tuple[str, int, str, str]] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)

    def error(self, file: str, line: int, code: str, message: str) -> None:
        self.errors.append((file, line, code, message))

    def warn(self, file: str, line: int, code: str, message: str) -> None:
        self.warnings.append((file, line, code, message))

    def merge(self, other: "ValidationReport") -> None:
        self.errors.extend(other.errors)
        self.warnings.extend(other.warnings)
        for k, v in other.counts.items():
            self.counts[k] = self.counts.get(k, 0) + v

    @property
    def ok(self) -> bool:
        return not self.errors

    def summary(self) -> str:
        parts = [f"{k}={v}" for k, v in sorted(self.counts.items())]
        return (
            f"records: {', '.join(parts) or 'none'}; "
            f"errors: {len(self.errors)}; warnings: {len(self.warnings)}"
        )


@dataclass(frozen=True)
class Corpus:
    """Validated, canonically sorted event streams plus the calendar.

    stock_pool is the set of stocks that appear in news; negative sampling
    draws only from it.
    """

    news: tuple[NewsItem, ...]
    reports: tuple[ReportEvent, ...]
    price_targets: tuple[PriceTargetSnapshot, ...]
    trades: tuple[TradeRecord, ...]
    calendar: TradingCalendar
    stock_pool: frozenset[StockId]

    def __post_init__(self):
        news_by_stock: dict[StockId, list[NewsItem]] = {}
        news_days: dict[StockId, dict[int, list[NewsItem]]] = {}
        for item in self.news:
            news_by_stock.setdefault(item.stock, []).append(item)
            news_days.setdefault(item.stock, {}).setdefault(item.day.ordinal, []).append(item)
        reports_at: dict[tuple[StockId, int], list[ReportEvent]] = {}
        for ev in self.reports:
            reports_at.setdefault((ev.stock, ev.day.ordinal), []).append(ev)
        pt_at: dict[tuple[StockId, int], PriceTargetSnapshot] = {
            (s.stock, s.day.ordinal): s for s in self.price_targets
        }
        trades_at: dict[tuple[StockId, int], list[TradeRecord]] = {}
        for tr in self.trades:
            trades_at.setdefault((tr.stock, tr.day.ordinal), []).append(tr)
        object.__setattr__(self, "_news_by_stock", news_by_stock)
        object.__setattr__(self, "_news_days", news_days)
        object.__setattr__(self, "_reports_at", reports_at)
        object.__setattr__(self, "_pt_at", pt_at)
        object.__setattr__(self, "_trades_at", trades_at)

    # lookup helpers used by the labeler; all keyed on (stock, ordinal)
    def news_days_for(self, stock: StockId) -> dict[int, list[NewsItem]]:
        return self._news_days.get(stock, {})

    def reports_at(self, stock: StockId, ordinal: int) -> list[ReportEvent]:
        return self._reports_at.get((stock, ordinal), [])

    def price_target_at(self, stock: StockId, ordinal: int) -> Optional[PriceTargetSnapshot]:
        return self._pt_at.get((stock, ordinal))

    def trades_at(self, stock: StockId, ordinal: int) -> list[TradeRecord]:
        return self._trades_at.get((stock, ordinal), [])


def load_calendar(path) -> TradingCalendar:
    """Read one ISO date per line; dates must be strictly ascending."""
    path = Path(path)
    dates: list[dt.date] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            date = dt.date.fromisoformat(line)
        except ValueError as exc:
            raise ParseError(f"{path.name}:{lineno}: bad date {line!r}") from exc
        if dates and date <= dates[-1]:
            raise OrderError(f"{path.name}:{lineno}: {line} not after {dates[-1]}")
        dates.append(date)
    if not dates:
        raise ParseError(f"{path.name}: calendar is empty")
    return TradingCalendar(dates)


def _nfc(value: str) -> str:
    return unicodedata.normalize("NFC", value)


def _parse_line(raw: str, fname: str, lineno: int, kind: str, report: ValidationReport):
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError:
        report.error(fname, lineno, "BAD_JSON", "line is not valid JSON")
        return None
    if not isinstance(obj, dict):
        report.error(fname, lineno, "BAD_JSON", "line is not a JSON object")
        return None
    missing = [f for f in STREAM_FIELDS[kind] if f not in obj]
    if missing:
        report.error(fname, lineno, "MISSING_FIELD", f"missing {', '.join(missing)}")
        return None
    try:
        obj["date"] = dt.date.fromisoformat(str(obj["date"]))
    except ValueError:
        report.error(fname, lineno, "BAD_DATE", f"bad date {obj['date']!r}")
        return None
    return obj


def _parse_stock(value, fname: str, lineno: int, report: ValidationReport) -> Optional[StockId]:
    try:
        return StockId(str(value))
    except ValidationError as exc:
        report.error(fname, lineno, "BAD_STOCK", str(exc))
        return None


def load_stream(path, kind: str, calendar: TradingCalendar):
    """Parse and validate one event stream file.

    Returns (events, ValidationReport); events are canonically sorted and
    contain only accepted records.
    """
    if kind not in STREAM_KINDS:
        raise ValidationError(f"unknown stream kind {kind!r}")
    path = Path(path)
    fname = path.name
    report = ValidationReport()
    events: list = []
    seen_news: dict[tuple[str, StockId], int] = {}
    news_text: dict[str, tuple] = {}
    seen_reports: set[tuple[StockId, int, str]] = set()
    seen_pt: dict[tuple[StockId, int], int] = {}

    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        obj = _parse_line(raw, fname, lineno, kind, report)
        if obj is None:
            continue
        date = obj["date"]

        if kind == "news":
            stocks_raw = obj["stock"] if isinstance(obj["stock"], list) else [obj["stock"]]
            stocks = [_parse_stock(s, fname, lineno, report) for s in stocks_raw]
            if any(s is None for s in stocks) or not stocks:
                continue
            if date in calendar:
                day = calendar.day(date)
            else:
                day = calendar.resolve_or_after(date)
                if day is None:
                    report.warn(
                        fname, lineno, "NOT_TRADING_DAY",
                        f"{date} has no later trading day; news dropped",
                    )
                    continue
                report.warn(
                    fname, lineno, "NOT_TRADING_DAY",
                    f"{date} is not a trading day; news shifted to {day.date}",
                )
            news_id = _nfc(str(obj["id"]))
            headline = _nfc(str(obj["headline"]))
            body = _nfc(str(obj["body"]))
            if not body:
                report.error(fname, lineno, "EMPTY_BODY", f"news {news_id}: empty body")
                continue
            signature = (date, headline, body)
            if news_id in news_text and news_text[news_id] != signature:
                report.error(
                    fname, lineno, "NEWS_ID_CONFLICT",
                    f"news {news_id}: same id with different date or text",
                )
                continue
            news_text[news_id] = signature
            for stock in stocks:
                key = (news_id, stock)
                if key in seen_news:
                    report.error(
                        fname, lineno, "DUP_NEWS",
                        f"news {news_id} for {stock} already seen at line {seen_news[key]}",
                    )
                    continue
                seen_news[key] = lineno
                events.append(NewsItem(news_id, stock, day, headline, body))
            continue

        # remaining streams: reject non-trading days outright
        stock = _parse_stock(obj["stock"], fname, lineno, report)
        if stock is None:
            continue
        if date not in calendar:
            report.warn(
                fname, lineno, "NOT_TRADING_DAY",
                f"{date} is not a trading day; {kind} record rejected",
            )
            continue
        day = calendar.day(date)

        if kind == "reports":
            analyst = _nfc(str(obj["analyst_id"]))
            key = (stock, day.ordinal, analyst)
            if key in seen_reports:
                report.warn(
                    fname, lineno, "DUP_REPORT",
                    f"duplicate report ({stock}, {day.date}, {analyst}) collapsed",
                )
                continue
            seen_reports.add(key)
            events.append(ReportEvent(stock, day, analyst))
        elif kind == "price_targets":
            ptkey = (stock, day.ordinal)
            if ptkey in seen_pt:
                report.error(
                    fname, lineno, "DUP_PT",
                    f"second price target for ({stock}, {day.date}); "
                    f"first at line {seen_pt[ptkey]}",
                )
                continue
            try:
                value = money(obj["avg_price_target"])
                snapshot = PriceTargetSnapshot(stock, day, value)
            except ValidationError as exc:
                report.error(fname, lineno, "BAD_AMOUNT", str(exc))
                continue
            seen_pt[ptkey] = lineno
            events.append(snapshot)
        else:  # trades
            try:
                record = TradeRecord(
                    stock, day, _nfc(str(obj["institution_id"])),
                    money(obj["buy_amount"]), money(obj["sell_amount"]),
                )
            except ValidationError as exc:
                report.error(fname, lineno, "BAD_AMOUNT", str(exc))
                continue
            events.append(record)

    events.sort(key=lambda e: e.sort_key())
    report.counts[kind] = len(events)
    return events, report


def build_corpus(streams: dict, calendar: TradingCalendar) -> Corpus:
    """Assemble a Corpus from validated streams; deterministic regardless
    of input file order."""
    news = tuple(sorted(streams.get("news", ()), key=lambda e: e.sort_key()))
    reports = tuple(sorted(streams.get("reports", ()), key=lambda e: e.sort_key()))
    price_targets = tuple(
        sorted(streams.get("price_targets", ()), key=lambda e: e.sort_key())
    )
    trades = tuple(sorted(streams.get("trades", ()), key=lambda e: e.sort_key()))
    stock_pool = frozenset(item.stock for item in news)
    return Corpus(news, reports, price_targets, trades, calendar, stock_pool)


def load_corpus(directory, calendar_path=None) -> tuple[Optional[Corpus], ValidationReport]:
    """Load calendar.txt plus the four streams from a directory.

    Returns (corpus, report); corpus is None when the report has errors.
    Missing stream files are treated as empty streams. calendar_path
    overrides the default <directory>/calendar.txt.
    """
    directory = Path(directory)
    calendar = load_calendar(calendar_path or directory / "calendar.txt")
    report = ValidationReport()
    streams: dict[str, list] = {}
    for kind in STREAM_KINDS:
        path = directory / f"{kind}.jsonl"
        if not path.exists():
            streams[kind] = []
            report.counts[kind] = 0
            continue
        events, stream_report = load_stream(path, kind, calendar)
        streams[kind] = events
        report.merge(stream_report)
    if not report.ok:
        return None, report
    return build_corpus(streams, calendar), report


def _dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def news_json(item: NewsItem) -> dict:
    return {
        "id": item.id,
        "stock": item.stock.code,
        "date": item.day.date.isoformat(),
        "headline": item.headline,
        "body": item.body,
    }


def report_json(ev: ReportEvent) -> dict:
    return {"stock": ev.stock.code, "date": ev.day.date.isoformat(), "analyst_id": ev.analyst_id}


def price_target_json(s: PriceTargetSnapshot) -> dict:
    return {
        "stock": s.stock.code,
        "date": s.day.date.isoformat(),
        "avg_price_target": money_str(s.avg_price_target),
    }


def trade_json(t: TradeRecord) -> dict:
    return {
        "stock": t.stock.code,
        "date": t.day.date.isoformat(),
        "institution_id": t.institution_id,
        "buy_amount": money_str(t.buy_amount),
        "sell_amount": money_str(t.sell_amount),
    }


def write_corpus(corpus: Corpus, directory) -> None:
    """Write the corpus back in canonical form (sorted, fixed field order).

    Writing then reloading yields an identical Corpus, and re-writing
    yields identical bytes.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "calendar.txt").write_text(
        "".join(f"{day.date.isoformat()}\n" for day in corpus.calendar), encoding="utf-8"
    )
    serializers = {
        "news": (corpus.news, news_json),
        "reports": (corpus.reports, report_json),
        "price_targets": (corpus.price_targets, price_target_json),
        "trades": (corpus.trades, trade_json),
    }
    for kind, (events, to_json) in serializers.items():
        text = "".join(_dumps(to_json(e)) + "\n" for e in events)
        (directory / f"{kind}.jsonl").write_text(text, encoding="utf-8")
