"""Rasterise price windows into chart images and Gramian angular fields.

Rendering is done straight into a ``uint8`` numpy buffer with hard pixel
edges (no anti-aliasing, no text), so identical inputs give byte-identical
images on every platform.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

WINDOW = 60


class Variant(str, enum.Enum):
    NO_VOLUME = "NoVolume"
    VOLUME = "Volume"
    MACD_MA = "MacdMa"
    GAF = "Gaf"
    MACD_VOLUME_LOWER = "MacdVolumeLower"


# panels listed top to bottom
DEFAULT_LAYOUTS = {
    Variant.NO_VOLUME: (("price", 1.0),),
    Variant.VOLUME: (("price", 0.75), ("volume", 0.25)),
    Variant.MACD_MA: (("price", 0.6), ("macd", 0.2), ("volume", 0.2)),
    Variant.GAF: (("price", 1.0),),
    Variant.MACD_VOLUME_LOWER: (("price", 0.6), ("volume", 0.2), ("macd", 0.2)),
}

NEEDS_INDICATORS = (Variant.MACD_MA, Variant.MACD_VOLUME_LOWER)

SMA_COLORS = {5: (0, 0, 255), 10: (255, 165, 0), 30: (128, 0, 128)}
MACD_LINE_COLOR = (0, 0, 255)
SIGNAL_LINE_COLOR = (255, 165, 0)
HISTOGRAM_COLOR = (128, 128, 128)


class ImagingError(ValueError):
    pass


class WrongWindowLength(ImagingError):
    pass


class MissingIndicators(ImagingError):
    pass


@dataclass(frozen=True)
class ChartStyle:
    variant: Variant = Variant.MACD_MA
    width_px: int = 96
    height_px: int = 96
    bullish_color: tuple = (255, 0, 0)
    bearish_color: tuple = (0, 255, 0)
    background: tuple = (255, 255, 255)
    layout: tuple = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.layout is None:
            object.__setattr__(self, "layout", DEFAULT_LAYOUTS[self.variant])
        if self.width_px <= 0 or self.height_px <= 0:
            raise ImagingError("image dimensions must be positive")
        if self.width_px % 16 or self.height_px % 16:
            raise ImagingError(
                f"image size {self.width_px}x{self.height_px} must be a multiple of 16"
            )
        if not math.isclose(sum(f for _, f in self.layout), 1.0, abs_tol=1e-9):
            raise ImagingError(f"panel fractions {self.layout} do not sum to 1")

    def panels(self):
        """``{name: (top_row, bottom_row_exclusive)}`` for each panel."""
        rows = {}
        acc = 0.0
        top = 0
        for name, frac in self.layout:
            acc += frac
            bottom = int(math.floor(self.height_px * acc + 0.5))
            rows[name] = (top, bottom)
            top = bottom
        return rows


@dataclass(frozen=True, eq=False)
class Image:
    """RGB raster, ``pixels`` is ``(height, width, 3)`` uint8, row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.dtype != np.uint8 or p.ndim != 3 or p.shape[2] != 3:
            raise ImagingError(f"expected (H, W, 3) uint8 pixels, got {p.shape} {p.dtype}")

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    def tobytes(self):
        return np.ascontiguousarray(self.pixels).tobytes()

    def __eq__(self, other):
        return isinstance(other, Image) and np.array_equal(self.pixels, other.pixels)

    def save_png(self, path):
        from PIL import Image as PILImage

        PILImage.fromarray(np.ascontiguousarray(self.pixels), mode="RGB").save(path, format="PNG")


def _to_row(values, lo, hi, top, bottom):
    """Map prices onto integer rows in ``[top, bottom)``, high values on top.

    Values outside ``[lo, hi]`` map outside the panel; callers clip.
    A zero range collapses everything onto the panel's middle row.
    """
    h = bottom - top
    values = np.asarray(values, dtype=np.float64)
    if hi <= lo:
        return np.full(values.shape, top + (h - 1) // 2, dtype=np.int64)
    scaled = (values - lo) / (hi - lo) * (h - 1)
    return top + (h - 1) - np.floor(scaled + 0.5).astype(np.int64)


def _vspan(px, x, r0, r1, top, bottom, color):
    a, b = (r0, r1) if r0 <= r1 else (r1, r0)
    a = max(a, top)
    b = min(b, bottom - 1)
    if a <= b:
        px[a:b + 1, x] = color


def _polyline(px, xs, rows, top, bottom, color):
    """Bresenham segments between consecutive points, clipped to a panel."""
    for k in range(len(xs) - 1):
        x0, y0, x1, y1 = int(xs[k]), int(rows[k]), int(xs[k + 1]), int(rows[k + 1])
        dx, dy = abs(x1 - x0), -abs(y1 - y0)
        sx = 1 if x0 < x1 else -1
        sy = 1 if y0 < y1 else -1
        err = dx + dy
        while True:
            if top <= y0 < bottom and 0 <= x0 < px.shape[1]:
                px[y0, x0] = color
            if x0 == x1 and y0 == y1:
                break
            e2 = 2 * err
            if e2 >= dy:
                err += dy
                x0 += sx
            if e2 <= dx:
                err += dx
                y0 += sy


def candle_geometry(width_px, n=WINDOW):
    """Left column of each body, body width, and wick column offset."""
    slot = width_px // n
    if slot < 1:
        raise ImagingError(f"{width_px}px is too narrow for {n} candles")
    body = slot - 1 if slot >= 3 else slot
    offset = (width_px - n * slot) // 2
    lefts = offset + slot * np.arange(n)
    return lefts, body, (body - 1) // 2


def _bar_arrays(window):
    bars = window.bars if hasattr(window, "bars") else tuple(window)
    o = np.array([b.open for b in bars], dtype=np.float64)
    h = np.array([b.high for b in bars], dtype=np.float64)
    l = np.array([b.low for b in bars], dtype=np.float64)
    c = np.array([b.close for b in bars], dtype=np.float64)
    v = np.array([b.volume for b in bars], dtype=np.float64)
    return o, h, l, c, v


def render_candles(window, indicators, style):
    """Draw a 60-bar window as a candlestick chart in ``style``.

    ``indicators`` is an :class:`~candlecnn.indicators.IndicatorBundle`
    already sliced to the window; it is required for the MACD variants and
    ignored otherwise.
    """
    o, h, l, c, v = _bar_arrays(window)
    n = o.shape[0]
    if n != WINDOW:
        raise WrongWindowLength(f"expected {WINDOW} bars, got {n}")
    if style.variant == Variant.GAF:
        raise ImagingError("GAF images come from gaf_to_image, not render_candles")
    with_indicators = style.variant in NEEDS_INDICATORS
    if with_indicators and (indicators is None or not indicators.is_defined()):
        raise MissingIndicators("MACD/MA variants need indicators defined on every bar")

    px = np.empty((style.height_px, style.width_px, 3), dtype=np.uint8)
    px[:] = style.background
    panels = style.panels()
    lefts, body_w, wick_off = candle_geometry(style.width_px, n)
    centers = lefts + wick_off
    bullish = c > o
    colors = [style.bullish_color if up else style.bearish_color for up in bullish]

    top, bottom = panels["price"]
    lo, hi = float(l.min()), float(h.max())
    if with_indicators:
        # drawn first so candle bodies stay pure bullish/bearish pixels
        for period, values in sorted(indicators.sma.items()):
            rows = _to_row(values, lo, hi, top, bottom)
            _polyline(px, centers, rows, top, bottom, SMA_COLORS.get(period, (0, 0, 0)))
    body_top = _to_row(np.maximum(o, c), lo, hi, top, bottom)
    body_bot = _to_row(np.minimum(o, c), lo, hi, top, bottom)
    wick_top = _to_row(h, lo, hi, top, bottom)
    wick_bot = _to_row(l, lo, hi, top, bottom)
    for i in range(n):
        _vspan(px, centers[i], wick_top[i], wick_bot[i], top, bottom, colors[i])
        px[body_top[i]:body_bot[i] + 1, lefts[i]:lefts[i] + body_w] = colors[i]

    if "volume" in panels:
        vt, vb = panels["volume"]
        vmax = float(v.max())
        heights = np.zeros(n, dtype=np.int64)
        if vmax > 0:
            heights = np.floor(v / vmax * (vb - vt) + 0.5).astype(np.int64)
        for i in range(n):
            if heights[i] > 0:
                px[vb - heights[i]:vb, lefts[i]:lefts[i] + body_w] = colors[i]

    if "macd" in panels:
        mt, mb = panels["macd"]
        m = indicators.macd
        allv = np.concatenate([m.macd_line, m.signal_line, m.histogram, [0.0]])
        mlo, mhi = float(allv.min()), float(allv.max())
        zero = int(_to_row([0.0], mlo, mhi, mt, mb)[0])
        hist = _to_row(m.histogram, mlo, mhi, mt, mb)
        for i in range(n):
            _vspan(px, centers[i], zero, hist[i], mt, mb, HISTOGRAM_COLOR)
        _polyline(px, centers, _to_row(m.macd_line, mlo, mhi, mt, mb), mt, mb, MACD_LINE_COLOR)
        _polyline(px, centers, _to_row(m.signal_line, mlo, mhi, mt, mb), mt, mb, SIGNAL_LINE_COLOR)

    return Image(px)


def gaf(closes):
    """Gramian angular summation field of a 1-D window.

    Values are min-max rescaled to [-1, 1], ``phi = arccos(x)`` and
    ``G[i, j] = cos(phi_i + phi_j)``. A flat window rescales to all zeros.
    """
    x = np.asarray(closes, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] == 0:
        raise ValueError("gaf needs a non-empty 1-D window")
    xt = rescale(x)
    # cos(a + b) expanded with cos(arccos x) = x, sin(arccos x) = sqrt(1 - x^2);
    # avoids arccos's unbounded slope at +-1
    s = np.sqrt(np.clip(1.0 - xt * xt, 0.0, None))
    return np.outer(xt, xt) - np.outer(s, s)


def rescale(closes):
    """The min-max rescaled series ``gaf`` works from."""
    x = np.asarray(closes, dtype=np.float64)
    lo, hi = x.min(), x.max()
    if hi <= lo:
        return np.zeros_like(x)
    return np.clip(2.0 * (x - lo) / (hi - lo) - 1.0, -1.0, 1.0)


def gaf_to_image(g, style):
    if style.variant != Variant.GAF:
        raise ImagingError("gaf_to_image needs a Gaf style")
    g = np.asarray(g, dtype=np.float64)
    gray = np.floor((np.clip(g, -1.0, 1.0) + 1.0) * 127.5 + 0.5).astype(np.uint8)
    rows = np.arange(style.height_px) * g.shape[0] // style.height_px
    cols = np.arange(style.width_px) * g.shape[1] // style.width_px
    up = gray[rows[:, None], cols[None, :]]
    return Image(np.repeat(up[:, :, None], 3, axis=2))


def render_window(window, indicators, style):
    """Image for any variant: GAF of closes or a candlestick chart."""
    if style.variant == Variant.GAF:
        closes = np.array([b.close for b in (window.bars if hasattr(window, "bars") else window)])
        if closes.shape[0] != WINDOW:
            raise WrongWindowLength(f"expected {WINDOW} bars, got {closes.shape[0]}")
        return gaf_to_image(gaf(closes), style)
    return render_candles(window, indicators, style)


def image_to_tensor(img, dtype=np.float32):
    """Channel-first ``(3, H, W)`` array scaled to [0, 1]."""
    dtype = np.dtype(dtype)
    return np.ascontiguousarray(img.pixels.transpose(2, 0, 1), dtype=dtype) / dtype.type(255.0)


def images_to_batch(pixels, dtype=np.float32):
    """``(N, H, W, 3)`` uint8 stack to an ``(N, 3, H, W)`` float batch."""
    dtype = np.dtype(dtype)
    return np.ascontiguousarray(pixels.transpose(0, 3, 1, 2)).astype(dtype) / dtype.type(255.0)


def tensor_to_image(t):
    t = np.asarray(t)
    px = np.floor(np.clip(t, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    return Image(np.ascontiguousarray(px.transpose(1, 2, 0)))
