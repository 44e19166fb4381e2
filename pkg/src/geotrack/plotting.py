"""Minimal static SVG line plots with a logarithmic y axis."""

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v):
    return f"{v:.2f}"


def log_plot_svg(series, title="", xlabel="k", ylabel="e_mean", width=640, height=420):
    """Render ``series`` (a list of ``(label, xs, ys)``) as an SVG string.

    Nonpositive ``y`` values are dropped since they have no logarithm.
    """
    pts = []
    for label, xs, ys in series:
        keep = [(float(x), float(y)) for x, y in zip(xs, ys) if y > 0 and math.isfinite(y)]
        pts.append((label, keep))
    allp = [p for _, ps in pts for p in ps]
    if not allp:
        raise ValueError("no positive finite values to plot")
    x0, x1 = min(p[0] for p in allp), max(p[0] for p in allp)
    e0 = math.floor(math.log10(min(p[1] for p in allp)))
    e1 = math.ceil(math.log10(max(p[1] for p in allp)))
    if e1 == e0:
        e1 += 1
    if x1 == x0:
        x1 = x0 + 1
    ml, mr, mt, mb = 70, 150, 40, 50
    pw, ph = width - ml - mr, height - mt - mb

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + (e1 - math.log10(y)) / (e1 - e0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for e in range(e0, e1 + 1):
        y = _fmt(sy(10.0**e))
        out.append(f'<line x1="{ml}" y1="{y}" x2="{ml + pw}" y2="{y}" stroke="#ddd"/>')
        out.append(f'<text x="{ml - 6}" y="{y}" text-anchor="end" dy="4">1e{e}</text>')
    for i in range(5):
        xv = x0 + i * (x1 - x0) / 4
        x = _fmt(sx(xv))
        out.append(f'<text x="{x}" y="{mt + ph + 18}" text-anchor="middle">{xv:g}</text>')
    out.append(
        f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{mt + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {mt + ph / 2})">{escape(ylabel)}</text>'
    )
    if title:
        out.append(f'<text x="{ml + pw / 2}" y="24" text-anchor="middle">{escape(title)}</text>')
    for i, (label, ps) in enumerate(pts):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in ps)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = mt + 16 + 18 * i
        out.append(
            f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 30}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(f'<text x="{ml + pw + 36}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
