"""Minimal static SVG line plots (no plotting dependency)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        step = max(1, (b - a) // 6)
        return [float(k) for k in range(a, b + 1, step)]
    if hi == lo:
        return [lo]
    raw = (hi - lo) / 5
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * abs(step):
        out.append(v)
        v += step
    return out


def _fmt(v, log):
    if log:
        return f"1e{int(v)}"
    return f"{v:.4g}"


def line_plot(series, *, title="", xlabel="", ylabel="", logx=False, logy=False,
              width=640, height=420, markers=True) -> str:
    """``series`` is a list of ``(label, xs, ys)``; non-positive values are dropped on log axes."""
    pts = []
    for label, xs, ys in series:
        keep = []
        for x, y in zip(xs, ys):
            if y is None or not math.isfinite(x) or not math.isfinite(y):
                continue
            if (logx and x <= 0) or (logy and y <= 0):
                continue
            keep.append((math.log10(x) if logx else x, math.log10(y) if logy else y))
        pts.append((label, keep))
    allx = [p[0] for _, ps in pts for p in ps] or [0.0, 1.0]
    ally = [p[1] for _, ps in pts for p in ps] or [0.0, 1.0]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    left, right, top, bottom = 70, 20, 36, 50
    pw, ph = width - left - right, height - top - bottom

    def X(v):
        return left + (v - x0) / (x1 - x0) * pw

    def Y(v):
        return top + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for v in _ticks(x0, x1, logx):
        if x0 <= v <= x1:
            out.append(f'<line x1="{X(v):.1f}" y1="{top + ph}" x2="{X(v):.1f}" y2="{top + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{X(v):.1f}" y="{top + ph + 18}" text-anchor="middle">{_fmt(v, logx)}</text>')
    for v in _ticks(y0, y1, logy):
        if y0 <= v <= y1:
            out.append(f'<line x1="{left - 5}" y1="{Y(v):.1f}" x2="{left}" y2="{Y(v):.1f}" stroke="black"/>')
            out.append(f'<text x="{left - 8}" y="{Y(v) + 4:.1f}" text-anchor="end">{_fmt(v, logy)}</text>')
    for k, (label, ps) in enumerate(pts):
        color = COLORS[k % len(COLORS)]
        if ps:
            path = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in ps)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            if markers:
                out.extend(f'<circle cx="{X(a):.2f}" cy="{Y(b):.2f}" r="2.5" fill="{color}"/>' for a, b in ps)
        ly = top + 14 + 14 * k
        out.append(f'<line x1="{left + pw - 110}" y1="{ly}" x2="{left + pw - 90}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 85}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
