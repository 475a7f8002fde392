"""Static line plots as standalone SVG documents."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def _ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def render_lines(series, title="", xlabel="", ylabel="", width=640, height=420, log_x=False):
    """SVG text for ``series``, a list of ``(label, xs, ys)`` triples.

    Non-finite points (and nonpositive x on a log axis) are dropped.
    """
    margin_l, margin_r, margin_t, margin_b = 70, 150, 40, 50
    pw, ph = width - margin_l - margin_r, height - margin_t - margin_b

    def tx(x):
        return math.log10(x) if log_x else x

    cleaned = []
    for label, xs, ys in series:
        pts = [(tx(float(x)), float(y)) for x, y in zip(xs, ys)
               if math.isfinite(float(y)) and (float(x) > 0 or not log_x)
               and math.isfinite(float(x))]
        cleaned.append((label, pts))
    allx = [p[0] for _, pts in cleaned for p in pts] or [0.0, 1.0]
    ally = [p[1] for _, pts in cleaned for p in pts] or [0.0, 1.0]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(x):
        return margin_l + (x - x0) / (x1 - x0) * pw

    def py(y):
        return margin_t + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin_l}" y="{margin_t}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        label = f"{10 ** t:.3g}" if log_x else f"{t:.3g}"
        out.append(f'<text x="{px(t):.2f}" y="{margin_t + ph + 15}" '
                   f'text-anchor="middle">{label}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{margin_l - 6}" y="{py(t) + 4:.2f}" '
                   f'text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{margin_l + pw / 2}" y="{height - 12}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{margin_t + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {margin_t + ph / 2})">{escape(ylabel)}</text>')
    out.append(f'<text x="{margin_l + pw / 2}" y="{margin_t - 14}" text-anchor="middle" '
               f'font-size="13">{escape(title)}</text>')
    for i, (label, pts) in enumerate(cleaned):
        color = PALETTE[i % len(PALETTE)]
        if pts:
            coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                       f'points="{coords}"/>')
        ly = margin_t + 14 + 16 * i
        out.append(f'<line x1="{margin_l + pw + 10}" y1="{ly - 4}" x2="{margin_l + pw + 30}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{margin_l + pw + 34}" y="{ly}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_lines(path, series, **kwargs):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_lines(series, **kwargs))
