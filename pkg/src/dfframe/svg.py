"""Minimal SVG line plots for metric files (no plotting dependency)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=40, bottom=55)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f")


def _ticks(lo, hi, n=5):
    step = (hi - lo) / n
    return [lo + i * step for i in range(n + 1)]


def line_plot(series: dict, xlabel: str, ylabel: str, title: str, xlim=None, ylim=None, logy=False) -> str:
    """``series`` maps a legend label to (xs, ys). With ``logy`` the y axis is
    log10-scaled and non-positive values are dropped from the polyline."""
    pts = {}
    for name, (xs, ys) in series.items():
        pairs = [(float(x), float(y)) for x, y in zip(xs, ys)]
        if logy:
            pairs = [(x, math.log10(y)) for x, y in pairs if y > 0]
        pts[name] = pairs
    every = [p for v in pts.values() for p in v] or [(0.0, 0.0)]
    x0, x1 = xlim or (min(p[0] for p in every), max(p[0] for p in every))
    if logy:
        y0 = math.floor(min(p[1] for p in every))
        y1 = math.ceil(max(p[1] for p in every))
    else:
        y0, y1 = ylim or (min(p[1] for p in every), max(p[1] for p in every))
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MARGIN["top"] + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.1f}" y1="{sy(y0):.1f}" x2="{sx(t):.1f}" y2="{sy(y0) + 5:.1f}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.1f}" y="{sy(y0) + 18:.1f}" text-anchor="middle">{t:.3g}</text>')
    yticks = [float(v) for v in range(int(y0), int(y1) + 1)] if logy else _ticks(y0, y1)
    for t in yticks:
        label = f"1e{int(t)}" if logy else f"{t:.3g}"
        out.append(f'<line x1="{sx(x0) - 5:.1f}" y1="{sy(t):.1f}" x2="{sx(x0):.1f}" y2="{sy(t):.1f}" stroke="black"/>')
        out.append(f'<text x="{sx(x0) - 8:.1f}" y="{sy(t) + 4:.1f}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    ylab = ylabel + (" (log scale)" if logy else "")
    out.append(f'<text transform="translate(18,{MARGIN["top"] + ph / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylab)}</text>')
    for i, (name, pairs) in enumerate(pts.items()):
        color = COLORS[i % len(COLORS)]
        if pairs:
            poly = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pairs)
            out.append(f'<polyline points="{poly}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN["top"] + 14 + 18 * i
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
