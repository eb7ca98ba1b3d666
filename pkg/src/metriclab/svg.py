"""Minimal self-contained SVG plots, byte-stable for identical inputs."""
from __future__ import annotations

import math

from .config import DomainError

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * abs(hi):
        out.append(round(t, 12))
        t += step
    return out or [lo]


def emit_plot(points, kind: str = "line", title: str = "", xlabel: str = "n",
              ylabel: str = "value", fitted=None, legend: str = "") -> str:
    """Render one data series (list of (x, y)) as a standalone SVG document.

    kind="semilog" plots log10 of the y values (zero/negative entries are
    dropped from the drawing but keep their x slot in the axis range).
    `fitted` draws an extra straight series, e.g. a regression line.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        raise DomainError("empty curve")
    if kind not in ("line", "semilog"):
        raise DomainError(f"unknown plot kind {kind!r}")

    def ty(y):
        return math.log10(y) if kind == "semilog" else y

    drawable = [(x, ty(y)) for x, y in pts if kind == "line" or y > 0]
    if not drawable:
        drawable = [(pts[0][0], 0.0)]
    xs = [p[0] for p in drawable]
    ys = [p[1] for p in drawable]
    if fitted:
        ys += [ty(y) if kind == "line" or y > 0 else min(ys) for x, y in fitted]
        xs += [x for x, _ in fitted]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1.0, x1 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0

    def px(x):
        return _ML + (x - x0) / (x1 - x0) * (_W - _ML - _MR)

    def py(y):
        return _H - _MB - (y - y0) / (y1 - y0) * (_H - _MT - _MB)

    rows = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
            f'<text x="{_W // 2}" y="18" text-anchor="middle" font-size="14">{title}</text>']
    rows.append(f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>')
    rows.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>')
    for t in _ticks(x0, x1):
        rows.append(f'<line x1="{_fmt(px(t))}" y1="{_H - _MB}" x2="{_fmt(px(t))}" '
                    f'y2="{_H - _MB + 5}" stroke="black"/>')
        rows.append(f'<text x="{_fmt(px(t))}" y="{_H - _MB + 18}" text-anchor="middle" '
                    f'font-size="11">{_fmt(t)}</text>')
    for t in _ticks(y0, y1):
        label = _fmt(10 ** t) if kind == "semilog" else _fmt(t)
        rows.append(f'<line x1="{_ML - 5}" y1="{_fmt(py(t))}" x2="{_ML}" '
                    f'y2="{_fmt(py(t))}" stroke="black"/>')
        rows.append(f'<text x="{_ML - 8}" y="{_fmt(py(t) + 4)}" text-anchor="end" '
                    f'font-size="11">{label}</text>')
    rows.append(f'<text x="{_W // 2}" y="{_H - 12}" text-anchor="middle" '
                f'font-size="12">{xlabel}</text>')
    rows.append(f'<text x="16" y="{_H // 2}" text-anchor="middle" font-size="12" '
                f'transform="rotate(-90 16 {_H // 2})">{ylabel}</text>')
    path = " ".join(f"{'M' if i == 0 else 'L'}{_fmt(px(x))},{_fmt(py(y))}"
                    for i, (x, y) in enumerate(drawable))
    rows.append(f'<path d="{path}" fill="none" stroke="#1f6fb2" stroke-width="1.5"/>')
    for x, y in drawable:
        rows.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="2.5" fill="#1f6fb2"/>')
    if fitted:
        fpts = [(x, ty(y)) for x, y in fitted if kind == "line" or y > 0]
        if fpts:
            fpath = " ".join(f"{'M' if i == 0 else 'L'}{_fmt(px(x))},{_fmt(py(y))}"
                             for i, (x, y) in enumerate(fpts))
            rows.append(f'<path d="{fpath}" fill="none" stroke="#c23b22" '
                        f'stroke-width="1.2" stroke-dasharray="5,4"/>')
    if legend:
        rows.append(f'<text x="{_W - _MR - 4}" y="{_MT + 14}" text-anchor="end" '
                    f'font-size="11">{legend}</text>')
    rows.append("</svg>")
    return "\n".join(rows) + "\n"
