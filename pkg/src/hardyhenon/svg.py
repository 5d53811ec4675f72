"""Minimal SVG line plots, so that figures need no plotting library."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_plot"]

_COLOURS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]


def line_plot(
    series: list[tuple[np.ndarray, np.ndarray, str]],
    path,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    xlim: tuple[float, float] | None = None,
    ylim: tuple[float, float] | None = None,
    width: int = 640,
    height: int = 480,
) -> None:
    """Write polylines for (x, y, label) series; points outside the window break the line."""
    finite = [(np.asarray(x, float), np.asarray(y, float), lab) for x, y, lab in series]
    allx = np.concatenate([x[np.isfinite(x)] for x, _, _ in finite]) if finite else np.array([0.0, 1.0])
    ally = np.concatenate([y[np.isfinite(y)] for _, y, _ in finite]) if finite else np.array([0.0, 1.0])
    x0, x1 = xlim if xlim else (float(allx.min()), float(allx.max()))
    y0, y1 = ylim if ylim else (float(ally.min()), float(ally.max()))
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0
    ml, mr, mt, mb = 60, 20, 30, 45
    pw, ph = width - ml - mr, height - mt - mb

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" transform="rotate(-90 14 {mt + ph / 2})">{escape(ylabel)}</text>',
    ]
    for t in np.linspace(0.0, 1.0, 5):
        xv, yv = x0 + t * (x1 - x0), y0 + t * (y1 - y0)
        out.append(f'<text x="{px(xv):.1f}" y="{mt + ph + 14}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{ml - 4}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    for i, (x, y, lab) in enumerate(finite):
        colour = _COLOURS[i % len(_COLOURS)]
        inside = np.isfinite(x) & np.isfinite(y) & (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)
        runs, cur = [], []
        for xi, yi, ok in zip(x, y, inside):
            if ok:
                cur.append(f"{px(xi):.2f},{py(yi):.2f}")
            elif cur:
                runs.append(cur)
                cur = []
        if cur:
            runs.append(cur)
        for r in runs:
            if len(r) > 1:
                out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{" ".join(r)}"/>')
        if lab and not lab.startswith("aux"):
            out.append(f'<text x="{ml + pw - 6}" y="{mt + 14 + 13 * i}" text-anchor="end" fill="{colour}">{escape(lab)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
