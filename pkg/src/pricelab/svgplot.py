"""Minimal native SVG line plots (log axes) for run diagnostics.

Hand-rolled on purpose: plots are diagnostic artifacts of the runner and
must not pull in a plotting stack.
"""

from __future__ import annotations

import math

_PALETTE = ["#0072B2", "#E69F00", "#009E73", "#D55E00", "#CC79A7", "#56B4E9", "#000000"]

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _ticks_log(lo, hi):
    lo10 = int(math.floor(math.log10(lo)))
    hi10 = int(math.ceil(math.log10(hi)))
    return [10.0**k for k in range(lo10, hi10 + 1)]


def _ticks_lin(lo, hi, n=6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10)), key=lambda s: abs(s - raw))
    start = math.ceil(lo / step) * step
    out = []
    x = start
    while x <= hi + 1e-12 * abs(hi):
        out.append(x)
        x += step
    return out


def svg_line_plot(series, path, xlabel="", ylabel="", title="",
                  logx=False, logy=False, extra_lines=()):
    """Write a multi-series line plot.

    ``series`` is a list of (label, x array, y array); ``extra_lines`` is a
    list of (label, x0, y0, x1, y1) reference segments (fitted slopes).
    Non-positive values are dropped on log axes.
    """
    pts = []
    for _, xs, ys in series:
        for x, y in zip(xs, ys):
            if (not logx or x > 0) and (not logy or abs(y) > 0):
                pts.append((x, abs(y) if logy else y))
    if not pts:
        raise ValueError("nothing to plot")
    xlo = min(p[0] for p in pts)
    xhi = max(p[0] for p in pts)
    ylo = min(p[1] for p in pts)
    yhi = max(p[1] for p in pts)
    if logy:
        ylo = max(ylo, yhi * 1e-16)

    def tx(x):
        if logx:
            a = (math.log10(x) - math.log10(xlo)) / max(math.log10(xhi) - math.log10(xlo), 1e-12)
        else:
            a = (x - xlo) / max(xhi - xlo, 1e-300)
        return _ML + a * (_W - _ML - _MR)

    def ty(y):
        if logy:
            y = max(abs(y), ylo)
            a = (math.log10(y) - math.log10(ylo)) / max(math.log10(yhi) - math.log10(ylo), 1e-12)
        else:
            a = (y - ylo) / max(yhi - ylo, 1e-300)
        return _H - _MB - a * (_H - _MT - _MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="11">']
    out.append(f'<rect width="{_W}" height="{_H}" fill="white"/>')
    out.append(f'<text x="{_W/2:.0f}" y="18" text-anchor="middle" font-size="13">{title}</text>')

    xticks = _ticks_log(xlo, xhi) if logx else _ticks_lin(xlo, xhi)
    yticks = _ticks_log(ylo, yhi) if logy else _ticks_lin(ylo, yhi)
    for v in xticks:
        if v < xlo or v > xhi:
            continue
        x = tx(v)
        out.append(f'<line x1="{x:.1f}" y1="{_MT}" x2="{x:.1f}" y2="{_H-_MB}" stroke="#ddd"/>')
        lab = f"1e{int(round(math.log10(v)))}" if logx else f"{v:g}"
        out.append(f'<text x="{x:.1f}" y="{_H-_MB+16}" text-anchor="middle">{lab}</text>')
    for v in yticks:
        if v < ylo or v > yhi:
            continue
        y = ty(v)
        out.append(f'<line x1="{_ML}" y1="{y:.1f}" x2="{_W-_MR}" y2="{y:.1f}" stroke="#ddd"/>')
        lab = f"1e{int(round(math.log10(v)))}" if logy else f"{v:g}"
        out.append(f'<text x="{_ML-6}" y="{y+4:.1f}" text-anchor="end">{lab}</text>')
    out.append(f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
               'fill="none" stroke="black"/>')
    out.append(f'<text x="{_W/2:.0f}" y="{_H-14}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{_H/2:.0f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_H/2:.0f})">{ylabel}</text>')

    for i, (label, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        seg = []
        for x, y in zip(xs, ys):
            if (logx and x <= 0) or (logy and y == 0):
                continue
            seg.append(f"{tx(x):.1f},{ty(abs(y) if logy else y):.1f}")
        if seg:
            out.append(f'<polyline points="{" ".join(seg)}" fill="none" stroke="{color}" stroke-width="1.3"/>')
            out.append(f'<text x="{_W-_MR-6}" y="{_MT+14+13*i}" text-anchor="end" fill="{color}">{label}</text>')

    for j, (label, x0, y0, x1, y1) in enumerate(extra_lines):
        out.append(f'<line x1="{tx(x0):.1f}" y1="{ty(y0):.1f}" x2="{tx(x1):.1f}" y2="{ty(y1):.1f}" '
                   'stroke="#888" stroke-dasharray="5,3"/>')
        out.append(f'<text x="{tx(x1):.1f}" y="{ty(y1)-4:.1f}" text-anchor="end" fill="#888">{label}</text>')

    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out))
    return path
