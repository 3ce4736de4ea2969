"""Minimal SVG line charts (no plotting dependency).

Writes log-log regret curves with axes, ticks, legend and a slope annotation.
The CSV data files remain the authoritative output; these charts are for
eyeballing rate fits.
"""

from __future__ import annotations

import math
from typing import Sequence

WIDTH, HEIGHT = 640, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 55
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _esc(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


class _Axes:
    def __init__(self, xs: Sequence[float], ys: Sequence[float], loglog: bool):
        self.loglog = loglog
        tx = [math.log10(x) for x in xs] if loglog else list(xs)
        ty = [math.log10(y) for y in ys] if loglog else list(ys)
        self.x_lo, self.x_hi = min(tx), max(tx)
        self.y_lo, self.y_hi = min(ty), max(ty)
        if self.x_hi == self.x_lo:
            self.x_hi += 1.0
        if self.y_hi == self.y_lo:
            self.y_hi += 1.0
        pad = 0.05 * (self.y_hi - self.y_lo)
        self.y_lo -= pad
        self.y_hi += pad

    def px(self, x: float) -> float:
        t = math.log10(x) if self.loglog else x
        frac = (t - self.x_lo) / (self.x_hi - self.x_lo)
        return MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y: float) -> float:
        t = math.log10(y) if self.loglog else y
        frac = (t - self.y_lo) / (self.y_hi - self.y_lo)
        return HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)


def line_chart(path: str, series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
               title: str, xlabel: str = "T", ylabel: str = "regret",
               loglog: bool = True, annotation: str = "") -> None:
    """Write a line chart; series with non-positive values are clipped in log mode."""
    cleaned = []
    for label, xs, ys in series:
        pairs = [(x, y) for x, y in zip(xs, ys)
                 if not loglog or (x > 0 and y > 0)]
        if pairs:
            cleaned.append((label, [p[0] for p in pairs], [p[1] for p in pairs]))
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
             f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
             f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
             f'<text x="{WIDTH/2}" y="22" text-anchor="middle" '
             f'font-size="15" font-family="sans-serif">{_esc(title)}</text>']
    if not cleaned:
        parts.append(f'<text x="{WIDTH/2}" y="{HEIGHT/2}" text-anchor="middle" '
                     f'font-size="13" font-family="sans-serif">no plottable data</text>')
        parts.append("</svg>")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(parts))
        return

    all_x = [x for _, xs, _ in cleaned for x in xs]
    all_y = [y for _, _, ys in cleaned for y in ys]
    ax = _Axes(all_x, all_y, loglog)

    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    for tx in _ticks(ax.x_lo, ax.x_hi):
        value = 10 ** tx if loglog else tx
        px = ax.px(value)
        parts.append(f'<line x1="{px}" y1="{y0}" x2="{px}" y2="{y0 + 5}" stroke="black"/>')
        parts.append(f'<text x="{px}" y="{y0 + 20}" text-anchor="middle" '
                     f'font-size="11" font-family="sans-serif">{value:.3g}</text>')
    for ty in _ticks(ax.y_lo, ax.y_hi):
        value = 10 ** ty if loglog else ty
        py = ax.py(value)
        parts.append(f'<line x1="{x0 - 5}" y1="{py}" x2="{x0}" y2="{py}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 8}" y="{py + 4}" text-anchor="end" '
                     f'font-size="11" font-family="sans-serif">{value:.3g}</text>')
    parts.append(f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 14}" text-anchor="middle" '
                 f'font-size="12" font-family="sans-serif">{_esc(xlabel)}</text>')
    parts.append(f'<text x="18" y="{(y0 + y1) / 2}" text-anchor="middle" '
                 f'font-size="12" font-family="sans-serif" '
                 f'transform="rotate(-90 18 {(y0 + y1) / 2})">{_esc(ylabel)}</text>')

    for i, (label, xs, ys) in enumerate(cleaned):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{ax.px(x):.2f},{ax.py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.8"/>')
        ly = MARGIN_T + 16 * i + 8
        parts.append(f'<line x1="{x1 - 150}" y1="{ly}" x2="{x1 - 130}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{x1 - 124}" y="{ly + 4}" font-size="11" '
                     f'font-family="sans-serif">{_esc(label)}</text>')
    if annotation:
        parts.append(f'<text x="{x0 + 10}" y="{y1 + 14}" font-size="12" '
                     f'font-family="sans-serif" fill="#444">{_esc(annotation)}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
