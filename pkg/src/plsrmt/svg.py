"""Minimal self-contained SVG charts: histograms with curves, stem plots and heatmaps."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 70, "right": 20, "top": 40, "bottom": 55}
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _num(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [v for v in np.arange(start, hi + step * 1e-9, step)]


def _label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.4g}"


class Figure:
    """A single panel with linear axes; elements are appended in data coordinates."""

    def __init__(self, title: str, xlim, ylim, xlabel: str = "", ylabel: str = ""):
        self.title = title
        self.xlim = (float(xlim[0]), float(xlim[1]))
        self.ylim = (float(ylim[0]), float(ylim[1]))
        if self.xlim[1] <= self.xlim[0]:
            self.xlim = (self.xlim[0], self.xlim[0] + 1.0)
        if self.ylim[1] <= self.ylim[0]:
            self.ylim = (self.ylim[0], self.ylim[0] + 1.0)
        self.xlabel, self.ylabel = xlabel, ylabel
        self.body: list[str] = []
        self.legend: list[tuple[str, str]] = []

    # data -> pixel
    def px(self, x):
        w = WIDTH - MARGIN["left"] - MARGIN["right"]
        return MARGIN["left"] + (np.asarray(x, dtype=float) - self.xlim[0]) / (self.xlim[1] - self.xlim[0]) * w

    def py(self, y):
        h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        return MARGIN["top"] + h - (np.asarray(y, dtype=float) - self.ylim[0]) / (self.ylim[1] - self.ylim[0]) * h

    def _add_legend(self, label, color):
        if label:
            self.legend.append((label, color))

    def bars(self, edges, heights, color="#9ecae1", label=None):
        edges = np.asarray(edges, dtype=float)
        for a, b, h in zip(edges[:-1], edges[1:], heights):
            if h <= 0:
                continue
            x0, x1 = self.px(a), self.px(b)
            y0, y1 = self.py(0), self.py(min(h, self.ylim[1]))
            self.body.append(
                f'<rect x="{_num(x0)}" y="{_num(y1)}" width="{_num(max(x1 - x0, 0.5))}" '
                f'height="{_num(y0 - y1)}" fill="{color}" stroke="none"/>'
            )
        self._add_legend(label, color)

    def line(self, x, y, color=PALETTE[1], width=2.0, dash=None, label=None):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if keep.sum() < 2:
            return
        y = np.clip(y, self.ylim[0] - 0.05 * (self.ylim[1] - self.ylim[0]), self.ylim[1])
        pts = " ".join(f"{_num(a)},{_num(b)}" for a, b in zip(self.px(x[keep]), self.py(y[keep])))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')
        self._add_legend(label, color)

    def vline(self, x, color=PALETTE[2], dash="6,4", label=None):
        X = _num(self.px(x))
        self.body.append(
            f'<line x1="{X}" x2="{X}" y1="{_num(self.py(self.ylim[0]))}" y2="{_num(self.py(self.ylim[1]))}" '
            f'stroke="{color}" stroke-width="1.5" stroke-dasharray="{dash}"/>'
        )
        self._add_legend(label, color)

    def markers(self, x, y, color=PALETTE[2], label=None, shape="circle"):
        for a, b in zip(self.px(x), self.py(y)):
            if shape == "circle":
                self.body.append(f'<circle cx="{_num(a)}" cy="{_num(b)}" r="4" fill="{color}"/>')
            else:
                self.body.append(
                    f'<path d="M{_num(a)},{_num(b - 6)} L{_num(a + 5)},{_num(b + 3)} L{_num(a - 5)},{_num(b + 3)} Z" fill="{color}"/>'
                )
        self._add_legend(label, color)

    def stems(self, y, color=PALETTE[0], label=None):
        y = np.asarray(y, dtype=float)
        x = np.arange(1, y.size + 1)
        base = self.py(0)
        for a, b in zip(self.px(x), self.py(y)):
            self.body.append(f'<line x1="{_num(a)}" x2="{_num(a)}" y1="{_num(base)}" y2="{_num(b)}" stroke="{color}" stroke-width="1"/>')
        self._add_legend(label, color)

    def error_bars(self, x, mean, err, color=PALETTE[0], label=None):
        for a, m, e in zip(x, mean, err):
            X = _num(self.px(a))
            self.body.append(
                f'<line x1="{X}" x2="{X}" y1="{_num(self.py(m - e))}" y2="{_num(self.py(m + e))}" stroke="{color}" stroke-width="2"/>'
            )
        self.markers(x, mean, color=color, label=label, shape="triangle")

    def _axes(self) -> list[str]:
        x0, x1 = self.px(self.xlim[0]), self.px(self.xlim[1])
        y0, y1 = self.py(self.ylim[0]), self.py(self.ylim[1])
        out = [f'<rect x="{_num(x0)}" y="{_num(y1)}" width="{_num(x1 - x0)}" height="{_num(y0 - y1)}" fill="none" stroke="#333"/>']
        for t in _ticks(*self.xlim):
            X = _num(self.px(t))
            out.append(f'<line x1="{X}" x2="{X}" y1="{_num(y0)}" y2="{_num(y0 + 5)}" stroke="#333"/>')
            out.append(f'<text x="{X}" y="{_num(y0 + 18)}" text-anchor="middle">{_label(t)}</text>')
        for t in _ticks(*self.ylim):
            Y = _num(self.py(t))
            out.append(f'<line x1="{_num(x0 - 5)}" x2="{_num(x0)}" y1="{Y}" y2="{Y}" stroke="#333"/>')
            out.append(f'<text x="{_num(x0 - 8)}" y="{Y}" text-anchor="end" dominant-baseline="middle">{_label(t)}</text>')
        out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(
            f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" transform="rotate(-90 16 {HEIGHT / 2})">{escape(self.ylabel)}</text>'
        )
        out.append(f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="15">{escape(self.title)}</text>')
        return out

    def _legend(self) -> list[str]:
        out = []
        x = WIDTH - MARGIN["right"] - 190
        for i, (label, color) in enumerate(self.legend):
            y = MARGIN["top"] + 14 + 18 * i
            out.append(f'<rect x="{x}" y="{y - 9}" width="14" height="10" fill="{color}"/>')
            out.append(f'<text x="{x + 20}" y="{y}">{escape(label)}</text>')
        return out

    def render(self) -> str:
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            '<rect width="100%" height="100%" fill="white"/>',
            *self.body,
            *self._axes(),
            *self._legend(),
            "</svg>",
        ]
        return "\n".join(parts) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render())
        return path


def _color_scale(t: float) -> str:
    # Blue -> white -> red diverging map on t in [-1, 1].
    t = max(-1.0, min(1.0, t))
    if t < 0:
        a = 1 + t
        r, g, b = 0.13 + 0.87 * a, 0.4 + 0.6 * a, 0.75 + 0.25 * a
    else:
        r, g, b = 1.0, 1 - 0.8 * t, 1 - 0.85 * t
    return "#%02x%02x%02x" % (int(255 * r), int(255 * g), int(255 * b))


def _seq_scale(t: float) -> str:
    # White -> dark blue sequential map on t in [0, 1].
    t = max(0.0, min(1.0, t))
    r, g, b = 1 - 0.9 * t, 1 - 0.7 * t, 1 - 0.45 * t
    return "#%02x%02x%02x" % (int(255 * r), int(255 * g), int(255 * b))


def heatmap(title: str, xs, ys, values, xlabel: str, ylabel: str, diverging: bool = False) -> Figure:
    """Cell grid with ``values[i, j]`` at ``(xs[i], ys[j])``; cells span neighbouring midpoints."""
    xs, ys, values = np.asarray(xs, float), np.asarray(ys, float), np.asarray(values, float)

    def edges(v):
        mid = (v[:-1] + v[1:]) / 2
        return np.concatenate([[v[0] - (mid[0] - v[0])], mid, [v[-1] + (v[-1] - mid[-1])]])

    ex, ey = edges(xs), edges(ys)
    fig = Figure(title, (ex[0], ex[-1]), (ey[0], ey[-1]), xlabel, ylabel)
    scale = float(np.nanmax(np.abs(values))) or 1.0
    for i in range(xs.size):
        for j in range(ys.size):
            v = values[i, j]
            color = _color_scale(v / scale) if diverging else _seq_scale(v / scale)
            x0, x1 = fig.px(ex[i]), fig.px(ex[i + 1])
            y0, y1 = fig.py(ey[j]), fig.py(ey[j + 1])
            fig.body.append(
                f'<rect x="{_num(x0)}" y="{_num(y1)}" width="{_num(x1 - x0 + 0.3)}" height="{_num(y0 - y1 + 0.3)}" fill="{color}"/>'
            )
    return fig
