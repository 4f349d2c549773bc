"""Static SVG line plots on logarithmic axes, written as plain text."""
from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=70, right=120, top=30, bottom=55)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _decades(lo, hi):
    return np.arange(np.floor(np.log10(lo)), np.ceil(np.log10(hi)) + 1)


def log_log_svg(x, series: dict, *, title: str, xlabel: str, ylabel: str,
                floor: float = 1e-12) -> str:
    """SVG text with one polyline per entry of ``series`` (label -> y values).

    Values below ``floor`` are clipped to it so exact zeros stay plottable.
    """
    x = np.asarray(x, dtype=float)
    ys = {k: np.maximum(np.asarray(v, dtype=float), floor) for k, v in series.items()}
    allv = np.concatenate(list(ys.values())) if ys else np.array([floor, 1.0])
    xd = _decades(x.min(), x.max())
    yd = _decades(allv.min(), allv.max())
    if len(xd) < 2:
        xd = np.array([xd[0] - 1, xd[0]])
    if len(yd) < 2:
        yd = np.array([yd[0] - 1, yd[0]])
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    def px(v):
        return x0 + (np.log10(v) - xd[0]) / (xd[-1] - xd[0]) * (x1 - x0)

    def py(v):
        return y0 + (np.log10(v) - yd[0]) / (yd[-1] - yd[0]) * (y1 - y0)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{(x0 + x1) / 2:.1f}" y="18" text-anchor="middle" font-size="14">{title}</text>']
    for d in xd:
        xp = px(10.0 ** d)
        out.append(f'<line x1="{xp:.1f}" y1="{y0}" x2="{xp:.1f}" y2="{y1}" stroke="#ddd"/>')
        out.append(f'<text x="{xp:.1f}" y="{y0 + 18}" text-anchor="middle">1e{int(d)}</text>')
    step = max(1, int(np.ceil(len(yd) / 8)))
    for d in yd[::step]:
        yp = py(10.0 ** d)
        out.append(f'<line x1="{x0}" y1="{yp:.1f}" x2="{x1}" y2="{yp:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{x0 - 6}" y="{yp + 4:.1f}" text-anchor="end">1e{int(d)}</text>')
    out.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
               'fill="none" stroke="black"/>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{ylabel}</text>')
    for i, (label, y) in enumerate(ys.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x, y))
        out.append(f'<polyline class="series" fill="none" stroke="{color}" stroke-width="1.8" '
                   f'points="{pts}"><title>{label}</title></polyline>')
        for a, b in zip(x, y):
            out.append(f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="3" fill="{color}"/>')
        ly = y1 + 16 * i + 10
        out.append(f'<line x1="{x1 + 12}" y1="{ly}" x2="{x1 + 32}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x1 + 38}" y="{ly + 4}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
