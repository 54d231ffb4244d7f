"""Experiment results: the TSV table, the JSON report and SVG figures.

Figures are a pure function of the results table, so regenerating them
from a stored ``results.tsv`` reproduces the files byte for byte.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from candlecnn import metrics
from candlecnn.ioutil import atomic_write_text

COLUMNS = (
    "strategy", "variant", "horizon", "tp", "fp", "tn", "fn",
    "sensitivity", "specificity", "accuracy", "mcc", "n_train", "n_test",
)

LEAKAGE_WARNING = (
    "WARNING: {strategies} split(s) place overlapping windows from the same period in "
    "both train and test, so the model can effectively look up an outcome it has "
    "already seen; these accuracies overstate out-of-sample skill. Prefer the Time split."
)


@dataclass(frozen=True)
class Cell:
    strategy: str
    variant: str
    horizon: int
    confusion: metrics.Confusion | None = None
    n_train: int = 0
    n_test: int = 0
    error: str | None = None

    @property
    def ok(self):
        return self.error is None

    def row(self):
        c = self.confusion
        s = metrics.scores(c)
        return (
            self.strategy, self.variant, str(self.horizon),
            str(c.tp), str(c.fp), str(c.tn), str(c.fn),
            repr(s["sensitivity"]), repr(s["specificity"]), repr(s["accuracy"]), repr(s["mcc"]),
            str(self.n_train), str(self.n_test),
        )

    def to_json(self):
        d = {
            "strategy": self.strategy,
            "variant": self.variant,
            "horizon": self.horizon,
            "status": "ok" if self.ok else "failed",
        }
        if self.ok:
            c = self.confusion
            d.update(tp=c.tp, fp=c.fp, tn=c.tn, fn=c.fn, n_train=self.n_train, n_test=self.n_test)
            d.update(metrics.scores(c))
        else:
            d["error"] = self.error
        return d


def results_tsv(cells):
    lines = ["\t".join(COLUMNS)]
    lines += ["\t".join(c.row()) for c in cells if c.ok]
    return "\n".join(lines) + "\n"


def parse_results(text):
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or tuple(lines[0].split("\t")) != COLUMNS:
        raise ValueError("not a results table")
    rows = []
    for line in lines[1:]:
        f = dict(zip(COLUMNS, line.split("\t")))
        for k in ("horizon", "tp", "fp", "tn", "fn", "n_train", "n_test"):
            f[k] = int(f[k])
        for k in ("sensitivity", "specificity", "accuracy", "mcc"):
            f[k] = float(f[k])
        rows.append(f)
    return rows


def leakage_banner(strategies):
    leaky = sorted({s for s in strategies if s in ("Random", "Automatic")})
    if not leaky:
        return None
    return LEAKAGE_WARNING.format(strategies="/".join(leaky))


def report_json(cells, provenance):
    banner = leakage_banner(c.strategy for c in cells)
    doc = {
        "provenance": provenance,
        "warnings": [banner] if banner else [],
        "cells": [c.to_json() for c in cells],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def report_text(cells, provenance):
    out = [f"config_hash: {provenance.get('config_hash', '')}"]
    banner = leakage_banner(c.strategy for c in cells)
    if banner:
        out.append(banner)
    for c in cells:
        head = f"{c.strategy:<9} {c.variant:<15} h={c.horizon:<3}"
        if c.ok:
            s = metrics.scores(c.confusion)
            out.append(
                f"{head} acc={s['accuracy']:.4f} sens={s['sensitivity']:.4f} "
                f"spec={s['specificity']:.4f} mcc={s['mcc']:.4f} "
                f"n_train={c.n_train} n_test={c.n_test}"
            )
        else:
            out.append(f"{head} FAILED: {c.error}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# SVG figures
# ---------------------------------------------------------------------------

W, H = 480, 320
LEFT, RIGHT, TOP, BOTTOM = 56, 120, 36, 44
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _y(v):
    return TOP + (1.0 - v) * (H - TOP - BOTTOM)


def _frame(title):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{_y(0):.2f}" x2="{W - RIGHT}" y2="{_y(0):.2f}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{_y(0):.2f}" x2="{LEFT}" y2="{_y(1):.2f}" stroke="black"/>',
    ]
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<text x="{LEFT - 6}" y="{_y(t) + 4:.2f}" text-anchor="end">{t:.2f}</text>'
        )
        parts.append(
            f'<line x1="{LEFT}" y1="{_y(t):.2f}" x2="{W - RIGHT}" y2="{_y(t):.2f}" '
            f'stroke="#dddddd"/>'
        )
    parts.append(
        f'<text x="14" y="{(TOP + H - BOTTOM) / 2:.1f}" '
        f'transform="rotate(-90 14 {(TOP + H - BOTTOM) / 2:.1f})" text-anchor="middle">accuracy</text>'
    )
    return parts


def _legend(parts, names):
    for k, name in enumerate(names):
        y = TOP + 16 * k
        color = PALETTE[k % len(PALETTE)]
        parts.append(f'<rect x="{W - RIGHT + 10}" y="{y}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{W - RIGHT + 26}" y="{y + 9}">{escape(name)}</text>')


def accuracy_vs_horizon_svg(variant, rows):
    """One polyline per split strategy, accuracy against horizon."""
    rows = [r for r in rows if r["variant"] == variant]
    horizons = sorted({r["horizon"] for r in rows})
    strategies = sorted({r["strategy"] for r in rows})
    span = W - LEFT - RIGHT
    xpos = {
        h: LEFT + span * (k + 0.5) / len(horizons) for k, h in enumerate(horizons)
    }
    parts = _frame(f"Accuracy vs horizon: {variant}")
    for h in horizons:
        parts.append(
            f'<text x="{xpos[h]:.2f}" y="{H - BOTTOM + 16}" text-anchor="middle">{h}</text>'
        )
    parts.append(f'<text x="{LEFT + span / 2:.1f}" y="{H - 8}" text-anchor="middle">horizon (days)</text>')
    for k, strat in enumerate(strategies):
        color = PALETTE[k % len(PALETTE)]
        pts = sorted((r["horizon"], r["accuracy"]) for r in rows if r["strategy"] == strat)
        coords = " ".join(f"{xpos[h]:.2f},{_y(a):.2f}" for h, a in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for h, a in pts:
            parts.append(
                f'<circle cx="{xpos[h]:.2f}" cy="{_y(a):.2f}" r="3" fill="{color}" '
                f'data-strategy="{escape(strat)}" data-horizon="{h}" data-value="{a!r}"/>'
            )
    _legend(parts, strategies)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def split_comparison_svg(rows):
    """Grouped bars: one group per (variant, horizon), one bar per strategy."""
    groups = sorted({(r["variant"], r["horizon"]) for r in rows})
    strategies = sorted({r["strategy"] for r in rows})
    span = W - LEFT - RIGHT
    group = span / max(1, len(groups))
    bar = group * 0.8 / max(1, len(strategies))
    parts = _frame("Accuracy by split strategy")
    for gi, (v, h) in enumerate(groups):
        gx = LEFT + gi * group + group * 0.1
        parts.append(
            f'<text x="{gx + group * 0.4:.2f}" y="{H - BOTTOM + 16}" text-anchor="middle">'
            f"{escape(v)} {h}</text>"
        )
        for si, s in enumerate(strategies):
            for r in rows:
                if (r["variant"], r["horizon"], r["strategy"]) != (v, h, s):
                    continue
                a = r["accuracy"]
                parts.append(
                    f'<rect x="{gx + si * bar:.2f}" y="{_y(a):.2f}" width="{bar:.2f}" '
                    f'height="{_y(0) - _y(a):.2f}" fill="{PALETTE[si % len(PALETTE)]}" '
                    f'data-strategy="{escape(s)}" data-variant="{escape(v)}" '
                    f'data-horizon="{h}" data-value="{a!r}"/>'
                )
    _legend(parts, strategies)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def figures(rows):
    """``{filename: svg_text}`` for a parsed results table."""
    out = {}
    for v in sorted({r["variant"] for r in rows}):
        out[f"accuracy_vs_horizon_{v}.svg"] = accuracy_vs_horizon_svg(v, rows)
    if len({r["strategy"] for r in rows}) > 1:
        out["split_comparison.svg"] = split_comparison_svg(rows)
    return out


def write_figures(results_path, fig_dir):
    rows = parse_results(Path(results_path).read_text(encoding="utf-8"))
    written = []
    for name, text in figures(rows).items():
        atomic_write_text(Path(fig_dir) / name, text)
        written.append(Path(fig_dir) / name)
    return written
