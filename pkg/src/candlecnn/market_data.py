"""OHLCV bars: CSV parsing, validation and HTTP download.

The CSV layout is Yahoo's historical-download format::

    Date,Open,High,Low,Close,Adj Close,Volume
    2019-01-02,100,105,99,104,104,1000

Parsing only checks syntax and date order; price invariants are reported
separately by :func:`validate` so that dirty vendor data can be inspected
instead of rejected.
"""
from __future__ import annotations

import datetime as dt
import io
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

import numpy as np

HEADER = "Date,Open,High,Low,Close,Adj Close,Volume"
COLUMNS = HEADER.split(",")


class MarketDataError(Exception):
    pass


class EmptyInput(MarketDataError):
    pass


class MalformedRow(MarketDataError):
    def __init__(self, line, reason=""):
        self.line = line
        super().__init__(f"malformed row at line {line}" + (f": {reason}" if reason else ""))


class NonMonotonicDates(MarketDataError):
    def __init__(self, line):
        self.line = line
        super().__init__(f"date at line {line} is not after the previous row")


class NetworkError(MarketDataError):
    pass


class HttpStatus(MarketDataError):
    def __init__(self, code):
        self.code = code
        super().__init__(f"HTTP status {code}")


@dataclass(frozen=True)
class Bar:
    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: int
    adj_close: float | None = None


@dataclass(frozen=True)
class Series:
    ticker: str
    bars: tuple[Bar, ...]

    def __len__(self):
        return len(self.bars)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Series(self.ticker, self.bars[idx])
        return self.bars[idx]

    @property
    def dates(self):
        return [b.date for b in self.bars]

    def column(self, name):
        """Field ``name`` of every bar as a float64 array."""
        return np.array([getattr(b, name) for b in self.bars], dtype=np.float64)

    @property
    def closes(self):
        return self.column("close")

    def between(self, start, end):
        """Bars with ``start <= date <= end``."""
        return Series(self.ticker, tuple(b for b in self.bars if start <= b.date <= end))


@dataclass(frozen=True)
class Violation:
    index: int
    rule: str


def _number(text):
    # Decimal rejects things float() accepts ("nan", "inf", "1_0")
    try:
        d = Decimal(text.strip())
    except InvalidOperation:
        raise ValueError(text) from None
    if not d.is_finite():
        raise ValueError(text)
    return float(d)


def _volume(text):
    text = text.strip()
    if not text.isdigit():
        # tolerate "1000.0" as written by some vendors, but never a sign
        value = _number(text)
        if value < 0 or value != int(value):
            raise ValueError(text)
        return int(value)
    return int(text)


def parse_csv(raw, ticker=""):
    """Parse Yahoo-format CSV bytes (or text) into a :class:`Series`.

    Line numbers in errors are 1-based and count the header as line 1.
    """
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8-sig")
    lines = raw.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise EmptyInput("no header row")
    if [c.strip() for c in lines[0].split(",")] != COLUMNS:
        raise MalformedRow(1, "unexpected header")
    bars = []
    prev = None
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != len(COLUMNS):
            raise MalformedRow(lineno, f"expected {len(COLUMNS)} fields, got {len(fields)}")
        try:
            date = dt.date.fromisoformat(fields[0].strip())
            o, h, l, c = (_number(f) for f in fields[1:5])
            adj = _number(fields[5]) if fields[5].strip() else None
            vol = _volume(fields[6])
        except ValueError as exc:
            raise MalformedRow(lineno, str(exc)) from None
        if prev is not None and date <= prev:
            raise NonMonotonicDates(lineno)
        prev = date
        bars.append(Bar(date, o, h, l, c, vol, adj))
    if not bars:
        raise EmptyInput("header only")
    return Series(ticker, tuple(bars))


def _fmt(x):
    return repr(float(x))


def serialize_csv(series):
    """Inverse of :func:`parse_csv` for clean series (LF line endings)."""
    out = io.StringIO()
    out.write(HEADER + "\n")
    for b in series.bars:
        adj = "" if b.adj_close is None else _fmt(b.adj_close)
        out.write(
            f"{b.date.isoformat()},{_fmt(b.open)},{_fmt(b.high)},{_fmt(b.low)},"
            f"{_fmt(b.close)},{adj},{b.volume}\n"
        )
    return out.getvalue().encode("utf-8")


def validate(series):
    """Every bar-invariant violation in ``series``; empty means clean."""
    found = []
    for i, b in enumerate(series.bars):
        if min(b.open, b.high, b.low, b.close) <= 0 or (b.adj_close is not None and b.adj_close <= 0):
            found.append(Violation(i, "prices>0"))
        if b.high < max(b.open, b.close):
            found.append(Violation(i, "high≥max(open,close)"))
        if b.low > min(b.open, b.close):
            found.append(Violation(i, "low≤min(open,close)"))
        if b.high < b.low:
            found.append(Violation(i, "high≥low"))
        if b.volume < 0:
            found.append(Violation(i, "volume≥0"))
    return found


def fetch_remote(ticker, start, end, endpoint, timeout=30.0):
    """GET ``endpoint?symbol=..&start=..&end=..`` and parse the CSV body.

    Rows outside ``[start, end]`` are dropped even if the server sends them.
    """
    query = urllib.parse.urlencode(
        {"symbol": ticker, "start": start.isoformat(), "end": end.isoformat()}
    )
    url = f"{endpoint}{'&' if '?' in endpoint else '?'}{query}"
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            body = resp.read()
    except urllib.error.HTTPError as exc:
        raise HttpStatus(exc.code) from None
    except (urllib.error.URLError, OSError) as exc:
        raise NetworkError(str(exc)) from exc
    series = parse_csv(body, ticker=ticker).between(start, end)
    if not series.bars:
        raise EmptyInput(f"no bars for {ticker} in [{start}, {end}]")
    return series


def load_csv(path, ticker=None):
    from pathlib import Path

    path = Path(path)
    return parse_csv(path.read_bytes(), ticker=ticker or path.stem)
