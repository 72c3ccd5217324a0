"""Minimal deterministic SVG plots (line charts and heatmaps).

Numbers are formatted with fixed precision and nothing time-dependent is
embedded, so identical inputs give identical bytes.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

W, H = 640, 420
ML, MR, MT, MB = 72, 24, 36, 56
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _f(v: float) -> str:
    return f"{v:.2f}"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        return []
    if hi == lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.3g}"
    return f"{v:.6g}"


def _header(title: str) -> list[str]:
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
            'font-family="sans-serif" font-size="12">',
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{_esc(title)}</text>']


def _axes(out, xlo, xhi, ylo, yhi, xlabel, ylabel, px, py):
    x0, x1, y0, y1 = ML, W - MR, H - MB, MT
    out.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="black"/>')
    for t in nice_ticks(xlo, xhi):
        X = px(t)
        out.append(f'<line x1="{_f(X)}" y1="{y0}" x2="{_f(X)}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{_f(X)}" y="{y0 + 18}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in nice_ticks(ylo, yhi):
        Y = py(t)
        out.append(f'<line x1="{x0 - 5}" y1="{_f(Y)}" x2="{x0}" y2="{_f(Y)}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8}" y="{_f(Y + 4)}" text-anchor="end">{_tick_label(t)}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{H - 14}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{_esc(ylabel)}</text>')


def _range(vals):
    a = np.asarray([v for v in vals if math.isfinite(v)], float)
    if a.size == 0:
        return 0.0, 1.0
    lo, hi = float(a.min()), float(a.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def line_plot(series: dict[str, tuple[Sequence[float], Sequence[float]]], *, title="", xlabel="", ylabel="",
              markers=True) -> str:
    xs = [v for x, _ in series.values() for v in x]
    ys = [v for _, y in series.values() for v in y]
    xlo, xhi = _range(xs)
    ylo, yhi = _range(ys)
    px = lambda v: ML + (v - xlo) / (xhi - xlo) * (W - ML - MR)
    py = lambda v: H - MB - (v - ylo) / (yhi - ylo) * (H - MB - MT)
    out = _header(title)
    _axes(out, xlo, xhi, ylo, yhi, xlabel, ylabel, px, py)
    for k, (name, (x, y)) in enumerate(series.items()):
        c = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_f(px(a))},{_f(py(b))}" for a, b in zip(x, y) if math.isfinite(b))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        if markers:
            for a, b in zip(x, y):
                if math.isfinite(b):
                    out.append(f'<circle cx="{_f(px(a))}" cy="{_f(py(b))}" r="2.5" fill="{c}"/>')
        ly = MT + 14 + 16 * k
        out.append(f'<line x1="{W - MR - 130}" y1="{ly - 4}" x2="{W - MR - 110}" y2="{ly - 4}" stroke="{c}" '
                   'stroke-width="2"/>')
        out.append(f'<text x="{W - MR - 104}" y="{ly}">{_esc(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _viridis(t: float) -> str:
    # piecewise-linear approximation through five viridis anchors
    anchors = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)]
    t = min(max(t, 0.0), 1.0) * (len(anchors) - 1)
    i = min(int(t), len(anchors) - 2)
    f = t - i
    r, g, b = (round(a + (c - a) * f) for a, c in zip(anchors[i], anchors[i + 1]))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(z: np.ndarray, x: Sequence[float], y: Sequence[float], *, title="", xlabel="", ylabel="",
            mark: tuple[float, float] | None = None, colorbar_label="") -> str:
    """z[i, j] at (x[i], y[j]); one rect per cell plus a colour bar."""
    z = np.asarray(z, float)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    nx, ny = z.shape
    dxh = (x[1] - x[0]) / 2 if nx > 1 else 0.5
    dyh = (y[1] - y[0]) / 2 if ny > 1 else 0.5
    xlo, xhi = x[0] - dxh, x[-1] + dxh
    ylo, yhi = y[0] - dyh, y[-1] + dyh
    right = W - MR - 70
    px = lambda v: ML + (v - xlo) / (xhi - xlo) * (right - ML)
    py = lambda v: H - MB - (v - ylo) / (yhi - ylo) * (H - MB - MT)
    zlo, zhi = float(np.nanmin(z)), float(np.nanmax(z))
    span = zhi - zlo if zhi > zlo else 1.0
    out = _header(title)
    cw = (right - ML) / nx
    ch = (H - MB - MT) / ny
    for i in range(nx):
        for j in range(ny):
            c = _viridis((z[i, j] - zlo) / span)
            out.append(f'<rect x="{_f(px(x[i] - dxh))}" y="{_f(py(y[j] + dyh))}" width="{_f(cw)}" '
                       f'height="{_f(ch)}" fill="{c}"/>')
    x0, x1, y0, y1 = ML, right, H - MB, MT
    out.append(f'<rect x="{x0}" y="{y1}" width="{_f(x1 - x0)}" height="{y0 - y1}" fill="none" stroke="black"/>')
    for t in nice_ticks(xlo, xhi):
        X = px(t)
        out.append(f'<text x="{_f(X)}" y="{y0 + 18}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in nice_ticks(ylo, yhi):
        out.append(f'<text x="{x0 - 8}" y="{_f(py(t) + 4)}" text-anchor="end">{_tick_label(t)}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{H - 14}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{_esc(ylabel)}</text>')
    if mark is not None:
        mx, my = px(mark[0]), py(mark[1])
        out.append(f'<circle cx="{_f(mx)}" cy="{_f(my)}" r="5" fill="none" stroke="white" stroke-width="2" '
                   'class="argmax"/>')
    # colour bar
    bx = W - MR - 50
    nb = 32
    bh = (H - MB - MT) / nb
    for k in range(nb):
        out.append(f'<rect x="{bx}" y="{_f(H - MB - (k + 1) * bh)}" width="14" height="{_f(bh + 0.5)}" '
                   f'fill="{_viridis((k + 0.5) / nb)}" class="colorbar"/>')
    out.append(f'<text x="{bx + 18}" y="{H - MB}">{_tick_label(zlo)}</text>')
    out.append(f'<text x="{bx + 18}" y="{MT + 10}">{_tick_label(zhi)}</text>')
    if colorbar_label:
        out.append(f'<text x="{bx + 7}" y="{MT - 6}" text-anchor="middle">{_esc(colorbar_label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
