"""Minimal deterministic SVG line/scatter charts.

Output depends only on the input numbers and labels: no timestamps, ids or
random salts, so identical tables give byte-identical files.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e", "#a6761d", "#666666")

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=72, right=150, top=36, bottom=56)


@dataclass(frozen=True)
class Series:
    x: str
    y: str
    label: str | None = None
    style: str | None = None  # "line" or "scatter"; None -> chart default
    dashed: bool = False


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    span = hi - lo
    raw = span / max(target, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(round(first + k * step, 12))
        k += 1
    return ticks


def _range(values: np.ndarray) -> tuple[float, float, bool]:
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi - lo <= 1e-12 * max(1.0, abs(lo), abs(hi)):
        pad = 0.5 if lo == 0 else 0.05 * abs(lo)
        return lo - pad, hi + pad, True
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad, False


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.6g}" if v != 0 else "0"


def emit_svg(table, series=None, *, style: str = "line", xlabel: str | None = None,
             ylabel: str | None = None, title: str | None = None) -> str:
    """Render ``table`` (a SweepTable) as a standalone SVG document.

    ``series`` is a list of :class:`Series`; by default every column is
    plotted against the independent variable. A degenerate axis range is
    padded and reported in the document's <metadata> block.
    """
    if len(table) < 2:
        raise ValueError("need at least two rows to plot")
    if series is None:
        series = [Series(table.variable, name, name) for name in table.columns]
    xs = [np.asarray(table[s.x], dtype=float) for s in series]
    ys = [np.asarray(table[s.y], dtype=float) for s in series]
    x0, x1, xdeg = _range(np.concatenate(xs))
    y0, y1, ydeg = _range(np.concatenate(ys))
    warnings = [f"degenerate {axis} range padded" for axis, deg in (("x", xdeg), ("y", ydeg)) if deg]

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
    ]
    meta = {"config": getattr(table, "metadata", {}), "warnings": warnings}
    out.append("<metadata>" + escape(json.dumps(meta, sort_keys=True, default=str)) + "</metadata>")
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>')

    # axes frame and ticks
    left, right = MARGIN["left"], MARGIN["left"] + pw
    top, bottom = MARGIN["top"], MARGIN["top"] + ph
    out.append('<g stroke="black" stroke-width="1" fill="none">')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}"/>')
    for t in nice_ticks(x0, x1):
        out.append(f'<line x1="{_fmt(px(t))}" y1="{bottom}" x2="{_fmt(px(t))}" y2="{bottom + 5}"/>')
    for t in nice_ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{_fmt(py(t))}" x2="{left}" y2="{_fmt(py(t))}"/>')
    out.append("</g>")
    out.append('<g fill="black">')
    for t in nice_ticks(x0, x1):
        out.append(f'<text x="{_fmt(px(t))}" y="{bottom + 18}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in nice_ticks(y0, y1):
        out.append(f'<text x="{left - 8}" y="{_fmt(py(t) + 4)}" text-anchor="end">{_tick_label(t)}</text>')
    if xlabel:
        out.append(f'<text x="{(left + right) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{(top + bottom) / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {(top + bottom) / 2:.1f})">{escape(ylabel)}</text>')
    out.append("</g>")

    for i, (s, x, y) in enumerate(zip(series, xs, ys)):
        color = PALETTE[i % len(PALETTE)]
        kind = s.style or style
        if kind == "scatter":
            out.append(f'<g fill="{color}" stroke="none">')
            out.extend(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="2.5"/>' for a, b in zip(x, y))
            out.append("</g>")
        else:
            dash = ' stroke-dasharray="5,3"' if s.dashed else ""
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>')
        ly = top + 14 + 16 * i
        out.append(f'<rect x="{right + 12}" y="{ly - 8}" width="12" height="8" fill="{color}"/>')
        out.append(f'<text x="{right + 30}" y="{ly}">{escape(s.label or s.y)}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
