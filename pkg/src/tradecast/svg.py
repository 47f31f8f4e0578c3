"""Minimal dependency-free SVG charts: line, bar and heatmap.

Output is deterministic for identical inputs (fixed number formatting, no
timestamps) so charts can be diffed in tests.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

WIDTH, HEIGHT = 640, 400
MARGIN = 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _f(v: float) -> str:
    return f"{v:.2f}"


def _doc(body: list[str], title: str, width=WIDTH, height=HEIGHT) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">')
    return "\n".join([
        '<?xml version="1.0" encoding="UTF-8"?>', head,
        f"<title>{escape(title)}</title>",
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
        *body, "</svg>", ""])


def _scale(lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def line_chart(series: dict[str, Sequence[tuple[float, float]]], title: str, path) -> None:
    """One polyline per named series; points are (x, y) pairs."""
    pts = [p for s in series.values() for p in s]
    xs = [p[0] for p in pts] or [0.0]
    ys = [p[1] for p in pts] or [0.0]
    sx = _scale(min(xs), max(xs), MARGIN, WIDTH - MARGIN)
    sy = _scale(min(ys), max(ys), HEIGHT - MARGIN, MARGIN)
    body = [f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
            f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
            f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>']
    for i, (name, s) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in s)
        body.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" '
                    f'data-series={quoteattr(name)} points="{coords}"/>')
        body.append(f'<text x="{WIDTH - MARGIN}" y="{MARGIN + 16 * i}" text-anchor="end" '
                    f'fill="{color}" font-size="12">{escape(name)}</text>')
    if pts:
        body.append(f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 18}" font-size="11">{min(xs):g}</text>')
        body.append(f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 18}" text-anchor="end" '
                    f'font-size="11">{max(xs):g}</text>')
    Path(path).write_text(_doc(body, title), encoding="utf-8")


def bar_chart(labels: Sequence[str], values: Sequence[float], title: str, path) -> None:
    n = max(1, len(labels))
    top = max([v for v in values] + [0.0])
    sy = _scale(0.0, top, HEIGHT - MARGIN, MARGIN)
    slot = (WIDTH - 2 * MARGIN) / n
    body = []
    for i, (lab, v) in enumerate(zip(labels, values)):
        x = MARGIN + i * slot + slot * 0.1
        y = sy(v)
        body.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(slot * 0.8)}" '
                    f'height="{_f(HEIGHT - MARGIN - y)}" fill="{PALETTE[0]}" data-label={quoteattr(lab)}/>')
        body.append(f'<text x="{_f(x + slot * 0.4)}" y="{HEIGHT - MARGIN + 18}" '
                    f'text-anchor="middle" font-size="12">{escape(lab)}</text>')
    Path(path).write_text(_doc(body, title), encoding="utf-8")


def _color(v: float) -> str:
    # diverging blue (-1) / white (0) / red (+1)
    if math.isnan(v):
        return "#cccccc"
    t = max(-1.0, min(1.0, v))
    if t >= 0:
        r, g, b = 255, int(255 * (1 - t)), int(255 * (1 - t))
    else:
        r, g, b = int(255 * (1 + t)), int(255 * (1 + t)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(names: Sequence[str], values, title: str, path) -> None:
    """Square grid colored by value in [-1, 1]; NaN cells are grey."""
    n = max(1, len(names))
    cell = min(40.0, (min(WIDTH, HEIGHT) - 2 * MARGIN) / n)
    size = int(2 * MARGIN + 100 + n * cell)
    body = []
    x0 = y0 = MARGIN + 100
    for i, name in enumerate(names):
        body.append(f'<text x="{x0 - 4}" y="{_f(y0 + (i + 0.6) * cell)}" text-anchor="end" '
                    f'font-size="10">{escape(name)}</text>')
        body.append(f'<text x="{_f(x0 + (i + 0.5) * cell)}" y="{y0 - 4}" font-size="10" '
                    f'transform="rotate(-45 {_f(x0 + (i + 0.5) * cell)} {y0 - 4})">{escape(name)}</text>')
        for j in range(len(names)):
            v = float(values[i][j])
            body.append(f'<rect x="{_f(x0 + j * cell)}" y="{_f(y0 + i * cell)}" width="{_f(cell)}" '
                        f'height="{_f(cell)}" fill="{_color(v)}"/>')
    Path(path).write_text(_doc(body, title, size, size), encoding="utf-8")
