"""Minimal deterministic SVG line and bar charts."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 720, 440
MARGIN = dict(left=70, right=170, top=40, bottom=55)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf"]


def _f(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out, v = [], start
    while v <= hi + 1e-12 * step:
        out.append(round(v, 12))
        v += step
    return out


def _frame(title: str, xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<text x="{(MARGIN["left"] + WIDTH - MARGIN["right"]) / 2:.0f}" y="{HEIGHT - 12}" '
        f'text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{HEIGHT / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {HEIGHT / 2:.0f})">{escape(ylabel)}</text>',
    ]


def _axes(x0, x1, y0, y1, xticks, yticks, xfmt, sx, sy) -> list[str]:
    left, top = MARGIN["left"], MARGIN["top"]
    right, bottom = WIDTH - MARGIN["right"], HEIGHT - MARGIN["bottom"]
    out = [f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
           f'fill="none" stroke="black"/>']
    for v in yticks:
        y = sy(v)
        out.append(f'<line x1="{left}" y1="{_f(y)}" x2="{right}" y2="{_f(y)}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{_f(y + 4)}" text-anchor="end">{v:g}</text>')
    for v in xticks:
        x = sx(v)
        out.append(f'<line x1="{_f(x)}" y1="{bottom}" x2="{_f(x)}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{_f(x)}" y="{bottom + 18}" text-anchor="middle">{xfmt(v)}</text>')
    return out


def _legend(labels: list[str]) -> list[str]:
    x = WIDTH - MARGIN["right"] + 12
    out = []
    for i, label in enumerate(labels):
        y = MARGIN["top"] + 14 + 18 * i
        out.append(f'<rect x="{x}" y="{y - 9}" width="14" height="10" fill="{PALETTE[i % len(PALETTE)]}"/>')
        out.append(f'<text x="{x + 20}" y="{y}">{escape(label)}</text>')
    return out


def line_chart(series, title: str, xlabel: str, ylabel: str) -> str:
    """``series`` is a list of ``(label, xs, ys)``."""
    xs_all = [float(x) for _, xs, _ in series for x in xs]
    ys_all = [float(y) for _, _, ys in series for y in ys if math.isfinite(float(y))]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(0.0, min(ys_all)), max(ys_all) * 1.05 or 1.0
    left, top = MARGIN["left"], MARGIN["top"]
    right, bottom = WIDTH - MARGIN["right"], HEIGHT - MARGIN["bottom"]
    sx = lambda v: left + (v - x0) / ((x1 - x0) or 1.0) * (right - left)  # noqa: E731
    sy = lambda v: bottom - (v - y0) / ((y1 - y0) or 1.0) * (bottom - top)  # noqa: E731
    out = _frame(title, xlabel, ylabel)
    out += _axes(x0, x1, y0, y1, _ticks(x0, x1), _ticks(y0, y1), lambda v: f"{v:g}", sx, sy)
    for i, (_, xs, ys) in enumerate(series):
        pts = " ".join(f"{_f(sx(float(x)))},{_f(sy(float(y)))}" for x, y in zip(xs, ys)
                       if math.isfinite(float(y)))
        out.append(f'<polyline fill="none" stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="1.5" '
                   f'points="{pts}"/>')
    out += _legend([label for label, _, _ in series])
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_chart(categories: list[str], groups, title: str, xlabel: str, ylabel: str) -> str:
    """Grouped bars; ``groups`` is a list of ``(label, values)`` aligned with ``categories``."""
    vals = [float(v) for _, values in groups for v in values]
    y1 = max(vals + [0.0]) * 1.1 or 1.0
    left, top = MARGIN["left"], MARGIN["top"]
    right, bottom = WIDTH - MARGIN["right"], HEIGHT - MARGIN["bottom"]
    sy = lambda v: bottom - v / y1 * (bottom - top)  # noqa: E731
    slot = (right - left) / max(len(categories), 1)
    bar = slot * 0.8 / max(len(groups), 1)
    out = _frame(title, xlabel, ylabel)
    for v in _ticks(0.0, y1):
        y = sy(v)
        out.append(f'<line x1="{left}" y1="{_f(y)}" x2="{right}" y2="{_f(y)}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{_f(y + 4)}" text-anchor="end">{v:g}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
               f'fill="none" stroke="black"/>')
    for j, cat in enumerate(categories):
        cx = left + slot * (j + 0.5)
        out.append(f'<text x="{_f(cx)}" y="{bottom + 18}" text-anchor="middle">{escape(cat)}</text>')
        for i, (_, values) in enumerate(groups):
            v = float(values[j])
            x = left + slot * j + slot * 0.1 + bar * i
            out.append(f'<rect x="{_f(x)}" y="{_f(sy(v))}" width="{_f(bar)}" '
                       f'height="{_f(bottom - sy(v))}" fill="{PALETTE[i % len(PALETTE)]}"/>')
    out += _legend([label for label, _ in groups])
    out.append("</svg>")
    return "\n".join(out) + "\n"
