"""Windowed, labelled samples and the three train/test split strategies."""
from __future__ import annotations

import datetime as dt
import enum
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from candlecnn import imaging, indicators
from candlecnn.ioutil import atomic_write_bytes

log = logging.getLogger(__name__)

WINDOW = imaging.WINDOW
WARMUP = 60
HORIZONS = (1, 20, 30, 60, 90)

MANIFEST_COLUMNS = ("ticker", "end_index", "end_date", "horizon", "label", "offset")


class DatasetError(ValueError):
    pass


class SeriesTooShort(DatasetError):
    pass


class EmptyInput(DatasetError):
    pass


class Strategy(str, enum.Enum):
    RANDOM = "Random"
    AUTOMATIC = "Automatic"
    TIME = "Time"


@dataclass(frozen=True, eq=False)
class Sample:
    """One rendered window. ``pixels`` is the ``(H, W, 3)`` uint8 raster."""

    pixels: np.ndarray
    label: int
    ticker: str
    end_index: int
    end_date: dt.date
    horizon_d: int

    @property
    def tensor(self):
        return imaging.image_to_tensor(imaging.Image(self.pixels))

    @property
    def key(self):
        return (self.ticker, self.end_index, self.horizon_d)


@dataclass(frozen=True)
class SplitResult:
    train: list
    test: list
    strategy: Strategy
    parameter: object
    seed: int | None = None


def label(series, i, d):
    """1 if the close ``d`` bars after ``i`` is strictly higher, else 0."""
    n = len(series)
    if i < 0 or d < 0 or i + d >= n:
        raise IndexError(f"need 0 <= i and i + d < {n}, got i={i}, d={d}")
    return int(series.bars[i + d].close > series.bars[i].close)


def labels(closes, d):
    """Vectorised :func:`label` for every ``i`` with ``i + d < len(closes)``."""
    closes = np.asarray(closes)
    return (closes[d:] > closes[:closes.shape[0] - d]).astype(np.int8)


def sample_count(length, horizon_d, window=WINDOW, warmup=WARMUP):
    return max(0, length - warmup - window - horizon_d + 1)


def build_samples(series, horizon_d, style, window=WINDOW, warmup=WARMUP):
    """One sample per end index ``i`` (stride 1) with a full window, a full
    warmup before it, and ``i + horizon_d`` still inside the series."""
    n = len(series)
    count = sample_count(n, horizon_d, window, warmup)
    if count <= 0:
        raise SeriesTooShort(
            f"{series.ticker or 'series'}: {n} bars < warmup {warmup} + window {window} "
            f"+ horizon {horizon_d}"
        )
    closes = series.closes
    bundle = None
    if style.variant in imaging.NEEDS_INDICATORS:
        # causal indicators, so computing on the full series leaks nothing
        bundle = indicators.bundle(closes)
    y = labels(closes, horizon_d)
    first = warmup + window - 1
    out = []
    for i in range(first, first + count):
        start = i - window + 1
        win = series.bars[start:i + 1]
        ind = bundle.window(start, i + 1) if bundle is not None else None
        img = imaging.render_window(win, ind, style)
        out.append(Sample(img.pixels, int(y[i]), series.ticker, i, series.bars[i].date, horizon_d))
    return out


def build_dataset(series_list, horizon_d, style, skip_short=True):
    """Samples for several tickers, concatenated in input order.

    Returns ``(samples, skipped)`` where ``skipped`` maps ticker to the
    reason it produced no samples.
    """
    samples, skipped = [], {}
    for s in series_list:
        try:
            samples.extend(build_samples(s, horizon_d, style))
        except SeriesTooShort as exc:
            if not skip_short:
                raise
            log.warning("skipping %s: %s", s.ticker, exc)
            skipped[s.ticker] = str(exc)
    return samples, skipped


def _check_partition(samples, train, test):
    ids = {id(s) for s in samples}
    tr = {id(s) for s in train}
    te = {id(s) for s in test}
    if tr & te or (tr | te) != ids or len(train) + len(test) != len(samples):
        raise AssertionError("split is not a partition of its input")


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def split_random(samples, test_ratio=0.2, seed=0):
    samples = list(samples)
    if not samples:
        raise EmptyInput("no samples to split")
    if not 0.0 < test_ratio < 1.0:
        raise ValueError(f"test_ratio must be in (0, 1), got {test_ratio}")
    n = len(samples)
    n_test = _round_half_up(test_ratio * n)
    perm = np.random.default_rng(seed).permutation(n)
    in_test = np.zeros(n, dtype=bool)
    in_test[perm[:n_test]] = True
    train = [s for s, t in zip(samples, in_test) if not t]
    test = [s for s, t in zip(samples, in_test) if t]
    _check_partition(samples, train, test)
    return SplitResult(train, test, Strategy.RANDOM, test_ratio, seed)


def split_automatic(samples, train_ratio=0.8):
    """Head/tail cut of the samples in their given order, no shuffling."""
    samples = list(samples)
    if not samples:
        raise EmptyInput("no samples to split")
    if not 0.0 < train_ratio <= 1.0:
        raise ValueError(f"train_ratio must be in (0, 1], got {train_ratio}")
    # tolerance keeps e.g. 0.29 * 100 from flooring to 28
    n_train = int(math.floor(train_ratio * len(samples) + 1e-9))
    train, test = samples[:n_train], samples[n_train:]
    _check_partition(samples, train, test)
    return SplitResult(train, test, Strategy.AUTOMATIC, train_ratio)


def split_time(samples, cutoff):
    """Train on windows ending before ``cutoff``, test on the rest.

    Labels of late training windows look ``horizon_d`` bars ahead and can
    cross the cutoff; the split is by window end date only.
    """
    samples = list(samples)
    if not samples:
        raise EmptyInput("no samples to split")
    train = [s for s in samples if s.end_date < cutoff]
    test = [s for s in samples if s.end_date >= cutoff]
    if not test:
        log.warning("time split at %s leaves the test set empty", cutoff)
    if not train:
        log.warning("time split at %s leaves the training set empty", cutoff)
    _check_partition(samples, train, test)
    return SplitResult(train, test, Strategy.TIME, cutoff)


def split(samples, strategy, *, test_ratio=0.2, train_ratio=0.8, cutoff=None, seed=0):
    strategy = Strategy(strategy)
    if strategy is Strategy.RANDOM:
        return split_random(samples, test_ratio, seed)
    if strategy is Strategy.AUTOMATIC:
        return split_automatic(samples, train_ratio)
    if cutoff is None:
        raise ValueError("time split needs a cutoff date")
    return split_time(samples, cutoff)


def stack(samples, dtype=np.float32):
    """``(X, y)`` arrays for training: X is ``(N, 3, H, W)``."""
    if not samples:
        return None, np.zeros(0, dtype=np.int64)
    pixels = np.stack([s.pixels for s in samples])
    y = np.array([s.label for s in samples], dtype=np.int64)
    return imaging.images_to_batch(pixels, dtype), y


# ---------------------------------------------------------------------------
# manifest + image store
# ---------------------------------------------------------------------------


def write_store(directory, samples):
    """Write ``manifest.tsv`` and ``images.npy`` under ``directory``.

    Each manifest line is one sample; ``offset`` indexes the first axis of
    the ``(N, H, W, 3)`` uint8 array in ``images.npy``.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(MANIFEST_COLUMNS)]
    for k, s in enumerate(samples):
        lines.append(
            f"{s.ticker}\t{s.end_index}\t{s.end_date.isoformat()}\t{s.horizon_d}\t{s.label}\t{k}"
        )
    atomic_write_bytes(directory / "manifest.tsv", ("\n".join(lines) + "\n").encode())
    if samples:
        pixels = np.stack([s.pixels for s in samples])
    else:
        pixels = np.zeros((0, 0, 0, 3), dtype=np.uint8)
    buf = io.BytesIO()
    np.save(buf, pixels, allow_pickle=False)
    atomic_write_bytes(directory / "images.npy", buf.getvalue())


def read_store(directory):
    directory = Path(directory)
    pixels = np.load(directory / "images.npy", allow_pickle=False)
    samples = []
    with open(directory / "manifest.tsv", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != MANIFEST_COLUMNS:
            raise DatasetError(f"unexpected manifest header {header}")
        for line in fh:
            if not line.strip():
                continue
            ticker, end_index, end_date, horizon, lab, offset = line.rstrip("\n").split("\t")
            samples.append(
                Sample(
                    pixels[int(offset)],
                    int(lab),
                    ticker,
                    int(end_index),
                    dt.date.fromisoformat(end_date),
                    int(horizon),
                )
            )
    return samples
