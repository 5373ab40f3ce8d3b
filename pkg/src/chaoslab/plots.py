"""Self-contained SVG line plots (no external assets, deterministic text).

Plotting is optional output; it never feeds back into CSV/JSON content.
"""

from __future__ import annotations

import math

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 36, 48

_COLORS = ("#1f6fb2", "#c4452c", "#3a8f4d", "#8056a3", "#b08a1e", "#4aa6a6")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


class _Axis:
    def __init__(self, lo: float, hi: float, log: bool):
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if hi <= lo:
            hi = lo + 1.0
        pad = 0.05 * (hi - lo)
        self.lo, self.hi = lo - pad, hi + pad
        self.log = log

    def unit(self, v: float) -> float:
        v = math.log10(v) if self.log else v
        return (v - self.lo) / (self.hi - self.lo)

    def ticks(self, k: int = 5):
        vals = [self.lo + i * (self.hi - self.lo) / (k - 1) for i in range(k)]
        return [(v, 10.0**v if self.log else v) for v in vals]


def line_plot_svg(
    title: str,
    xlabel: str,
    ylabel: str,
    series: list[dict],
    logx: bool = False,
    logy: bool = False,
) -> str:
    """Series: {"label", "x", "y", optional "band" (half-widths around y)}."""
    xs = [float(v) for s in series for v in s["x"]]
    ys = [float(v) for s in series for v in s["y"]]
    for s in series:
        for y, b in zip(s["y"], s.get("band") or []):
            ys.extend([float(y) - float(b), float(y) + float(b)])
    if logx:
        xs = [v for v in xs if v > 0]
    if logy:
        ys = [v for v in ys if v > 0]
    if not xs or not ys:
        xs, ys = [1.0], [1.0]
    ax = _Axis(min(xs), max(xs), logx)
    ay = _Axis(min(ys), max(ys), logy)

    def px(v: float) -> float:
        return MARGIN_L + ax.unit(v) * (WIDTH - MARGIN_L - MARGIN_R)

    def py(v: float) -> float:
        return HEIGHT - MARGIN_B - ay.unit(v) * (HEIGHT - MARGIN_T - MARGIN_B)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="monospace" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {HEIGHT / 2})">{ylabel}</text>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{WIDTH - MARGIN_L - MARGIN_R}" '
        f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="none" stroke="#333"/>',
    ]
    for u, v in ax.ticks():
        x = MARGIN_L + (u - ax.lo) / (ax.hi - ax.lo) * (WIDTH - MARGIN_L - MARGIN_R)
        parts.append(f'<line x1="{_fmt(x)}" y1="{HEIGHT - MARGIN_B}" x2="{_fmt(x)}" y2="{HEIGHT - MARGIN_B + 4}" stroke="#333"/>')
        parts.append(f'<text x="{_fmt(x)}" y="{HEIGHT - MARGIN_B + 18}" text-anchor="middle">{_fmt(v)}</text>')
    for u, v in ay.ticks():
        y = HEIGHT - MARGIN_B - (u - ay.lo) / (ay.hi - ay.lo) * (HEIGHT - MARGIN_T - MARGIN_B)
        parts.append(f'<line x1="{MARGIN_L - 4}" y1="{_fmt(y)}" x2="{MARGIN_L}" y2="{_fmt(y)}" stroke="#333"/>')
        parts.append(f'<text x="{MARGIN_L - 8}" y="{_fmt(y + 4)}" text-anchor="end">{_fmt(v)}</text>')

    for idx, s in enumerate(series):
        color = _COLORS[idx % len(_COLORS)]
        pts = [(float(x), float(y)) for x, y in zip(s["x"], s["y"])]
        if logx:
            pts = [(x, y) for x, y in pts if x > 0]
        if logy:
            pts = [(x, y) for x, y in pts if y > 0]
        band = s.get("band")
        if band is not None and not logy:
            upper = [(x, y + float(b)) for (x, y), b in zip(pts, band)]
            lower = [(x, y - float(b)) for (x, y), b in zip(pts, band)]
            ring = upper + lower[::-1]
            path = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in ring)
            parts.append(f'<polygon points="{path}" fill="{color}" opacity="0.15"/>')
        path = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pts)
        parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        y_leg = MARGIN_T + 14 + 15 * idx
        parts.append(f'<line x1="{WIDTH - 170}" y1="{y_leg - 4}" x2="{WIDTH - 150}" y2="{y_leg - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{WIDTH - 144}" y="{y_leg}">{s["label"]}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
