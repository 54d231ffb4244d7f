"""Moving averages and MACD over closing prices.

All functions return float64 arrays aligned index-for-index with the
input. Warmup positions where an indicator is not yet defined hold NaN;
they are never filled with zeros.
"""
from dataclasses import dataclass

import numpy as np

from candlecnn import kernels

MACD_FAST = 12
MACD_SLOW = 26
MACD_SIGNAL = 9
SMA_PERIODS = (5, 10, 30)


class PeriodTooLong(ValueError):
    pass


def _check(closes, n):
    closes = np.asarray(closes, dtype=np.float64)
    if closes.ndim != 1:
        raise ValueError("closes must be one-dimensional")
    if n < 1:
        raise ValueError(f"period must be >= 1, got {n}")
    if n > closes.shape[0]:
        raise PeriodTooLong(f"period {n} exceeds series length {closes.shape[0]}")
    return closes


def sma(closes, n):
    closes = _check(closes, n)
    out = np.full(closes.shape, np.nan)
    # direct window means rather than a cumsum difference, which drifts
    out[n - 1:] = np.lib.stride_tricks.sliding_window_view(closes, n).mean(axis=1)
    return out


def ema(closes, n):
    """EMA seeded with the n-period SMA at index n-1, alpha = 2/(n+1)."""
    closes = _check(closes, n)
    out = np.full(closes.shape, np.nan)
    out[n - 1] = closes[:n].mean()
    return kernels.ema_recursion(closes, out, n - 1, 2.0 / (n + 1))


@dataclass(frozen=True)
class Macd:
    macd_line: np.ndarray
    signal_line: np.ndarray
    histogram: np.ndarray


def macd(closes, fast=MACD_FAST, slow=MACD_SLOW, signal=MACD_SIGNAL):
    closes = _check(closes, slow)
    line = ema(closes, fast) - ema(closes, slow)  # NaN until slow-1
    sig = np.full(closes.shape, np.nan)
    defined = np.flatnonzero(~np.isnan(line))
    if defined.shape[0] >= signal:
        sig[defined] = ema(line[defined], signal)
    return Macd(line, sig, line - sig)


@dataclass(frozen=True)
class IndicatorBundle:
    """Everything the MACD/MA chart variants draw, aligned to a series."""

    sma: dict  # period -> array
    macd: Macd

    def window(self, start, stop):
        return IndicatorBundle(
            {p: v[start:stop] for p, v in self.sma.items()},
            Macd(
                self.macd.macd_line[start:stop],
                self.macd.signal_line[start:stop],
                self.macd.histogram[start:stop],
            ),
        )

    def is_defined(self):
        arrays = list(self.sma.values()) + [
            self.macd.macd_line, self.macd.signal_line, self.macd.histogram
        ]
        return all(not np.isnan(a).any() for a in arrays)


def bundle(closes, periods=SMA_PERIODS):
    closes = np.asarray(closes, dtype=np.float64)
    return IndicatorBundle({p: sma(closes, p) for p in periods}, macd(closes))
