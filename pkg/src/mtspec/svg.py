"""Minimal SVG line and heat-map writer.

CSV files are the record of a run; these plots are a convenience and carry
no information the CSV does not. Output is deterministic for given input.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["line_plot", "heat_map"]

_W, _H = 640, 420
_MARGIN = (70, 20, 30, 50)  # left, right, top, bottom
_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float, log: bool) -> str:
    return f"{10**v:.3g}" if log else f"{v:.3g}"


def _header(title: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="13">{_escape(title)}</text>',
    ]


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def line_plot(path, series, title="", xlabel="", ylabel="", logx=False, logy=False) -> None:
    """Write an SVG line plot.

    Parameters
    ----------
    series : list of (label, x, y, style)
        ``style`` is ``"line"``, ``"dash"`` or ``"marker"``.
    """
    left, right, top, bottom = _MARGIN
    pw, ph = _W - left - right, _H - top - bottom
    prepared = []
    for label, x, y, style in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logx:
            keep &= x > 0
        if logy:
            keep &= y > 0
        x, y = x[keep], y[keep]
        prepared.append((label, np.log10(x) if logx else x, np.log10(y) if logy else y, style))
    allx = np.concatenate([p[1] for p in prepared]) if prepared else np.zeros(1)
    ally = np.concatenate([p[2] for p in prepared]) if prepared else np.zeros(1)
    if allx.size == 0:
        allx = ally = np.zeros(1)
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (1.0 - (v - y0) / (y1 - y0)) * ph

    out = _header(title)
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for i in range(5):
        fx = x0 + i * (x1 - x0) / 4
        fy = y0 + i * (y1 - y0) / 4
        out.append(f'<text x="{_fmt(sx(fx))}" y="{top + ph + 15}" text-anchor="middle">'
                   f'{_tick_label(fx, logx)}</text>')
        out.append(f'<text x="{left - 5}" y="{_fmt(sy(fy) + 4)}" text-anchor="end">'
                   f'{_tick_label(fy, logy)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{_H - 10}" text-anchor="middle">{_escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {top + ph / 2})">{_escape(ylabel)}</text>')
    for i, (label, x, y, style) in enumerate(prepared):
        colour = _COLOURS[i % len(_COLOURS)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y))
        if style == "marker":
            for a, b in zip(x, y):
                out.append(f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" r="3" fill="{colour}"/>')
        else:
            dash = ' stroke-dasharray="6,4"' if style == "dash" else ""
            out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>')
        ly = top + 15 + 15 * i
        out.append(f'<text x="{left + pw - 10}" y="{ly}" text-anchor="end" fill="{colour}">'
                   f'{_escape(label)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def heat_map(path, values, title="", extent=(-0.5, 0.5)) -> None:
    """Write a 2-D array as a grey-scale SVG heat map (row 0 at the top)."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError("heat_map needs a 2-D array")
    left, right, top, bottom = _MARGIN
    size = min(_W - left - right, _H - top - bottom)
    ny, nx = values.shape
    cw, ch = size / nx, size / ny
    lo, hi = float(np.nanmin(values)), float(np.nanmax(values))
    span = hi - lo if hi > lo else 1.0
    out = _header(title)
    for i in range(ny):
        for j in range(nx):
            g = int(round(255 * (1.0 - (values[i, j] - lo) / span)))
            out.append(f'<rect x="{_fmt(left + j * cw)}" y="{_fmt(top + i * ch)}" '
                       f'width="{_fmt(cw + 0.05)}" height="{_fmt(ch + 0.05)}" fill="rgb({g},{g},{g})"/>')
    out.append(f'<text x="{left}" y="{top + size + 15}">{extent[0]:g}</text>')
    out.append(f'<text x="{left + size}" y="{top + size + 15}" text-anchor="end">{extent[1]:g}</text>')
    out.append(f'<text x="{left + size + 10}" y="{top + 10}">max {hi:.4g}</text>')
    out.append(f'<text x="{left + size + 10}" y="{top + size}">min {lo:.4g}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def log_range(lo: float, hi: float, count: int) -> np.ndarray:
    return np.exp(np.linspace(math.log(lo), math.log(hi), count))
