"""Synthetic OHLCV series for tests, demos and pipeline sanity checks."""
import datetime as dt

import numpy as np

from candlecnn.market_data import Bar, Series


def business_days(start, n):
    """``n`` consecutive Monday-Friday dates starting at or after ``start``."""
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    days = np.busday_offset(first, np.arange(n))
    return [d.astype(dt.date) for d in days]


def random_walk(ticker, start, n, *, drift=0.0, vol=0.01, price=100.0, seed=0):
    """Geometric random walk with per-bar log drift ``drift``.

    Opens gap slightly from the previous close; highs and lows extend past
    the body by a random fraction of ``vol``. Every bar satisfies the
    OHLC invariants checked by :func:`candlecnn.market_data.validate`.
    """
    rng = np.random.default_rng(seed)
    rets = drift + vol * rng.standard_normal(n)
    closes = price * np.exp(np.cumsum(rets))
    prev = np.concatenate(([price], closes[:-1]))
    opens = prev * np.exp(0.25 * vol * rng.standard_normal(n))
    top = np.maximum(opens, closes)
    bot = np.minimum(opens, closes)
    highs = top * (1.0 + 0.5 * vol * np.abs(rng.standard_normal(n)))
    lows = bot * (1.0 - 0.5 * vol * np.abs(rng.standard_normal(n)))
    volumes = rng.integers(1_000, 100_000, size=n)
    # round to cents like real quotes; keeps CSV round-trips short
    opens, highs, lows, closes = (np.round(a, 2) for a in (opens, highs, lows, closes))
    highs = np.maximum(highs, np.maximum(opens, closes))
    lows = np.minimum(lows, np.minimum(opens, closes))
    dates = business_days(start, n)
    bars = tuple(
        Bar(d, float(o), float(h), float(l), float(c), int(v), float(c))
        for d, o, h, l, c, v in zip(dates, opens, highs, lows, closes, volumes)
    )
    return Series(ticker, bars)


def trend_universe(count, n, *, start=dt.date(2015, 1, 2), stagger=0, drift=0.01, vol=0.005, seed=0):
    """``count`` series, each with a persistent up or down drift.

    Series ``k`` starts ``k * stagger`` business days after ``start``.
    Returns ``(series_list, directions)`` with direction 1 for up.
    """
    rng = np.random.default_rng(seed)
    directions = rng.integers(0, 2, size=count)
    out = []
    for k in range(count):
        s0 = business_days(start, k * stagger + 1)[-1]
        sign = 1.0 if directions[k] else -1.0
        out.append(
            random_walk(f"SYN{k:03d}", s0, n, drift=sign * drift, vol=vol, seed=seed * 100_003 + k)
        )
    return out, directions
