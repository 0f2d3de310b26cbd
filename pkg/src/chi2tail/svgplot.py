"""Tiny standalone SVG line-plot writer.

Only what the experiment reports need: one panel, optional log axes,
polylines with optional markers, dashed reference lines and a legend.
Output is deterministic text with fixed float formatting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


@dataclass
class Series:
    label: str
    x: list
    y: list
    dashed: bool = False
    markers: bool = False


@dataclass
class Plot:
    title: str
    xlabel: str
    ylabel: str
    logx: bool = False
    logy: bool = False
    width: int = 640
    height: int = 420
    series: list = field(default_factory=list)

    def add(self, label, x, y, dashed=False, markers=False) -> None:
        self.series.append(Series(label, [float(v) for v in x], [float(v) for v in y],
                                  dashed, markers))

    def render(self) -> str:
        return render(self)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(render(self))


def _f(v: float) -> str:
    return f"{v:.2f}"


def _usable(v: float, log: bool) -> bool:
    return math.isfinite(v) and (v > 0 or not log)


def _range(vals, log):
    vals = [math.log10(v) if log else v for v in vals]
    if not vals:
        return (0.0, 1.0)
    lo, hi = min(vals), max(vals)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def _ticks(lo, hi, log):
    if log:
        return [float(e) for e in range(math.ceil(lo), math.floor(hi) + 1)] or [lo, hi]
    step = 10 ** math.floor(math.log10((hi - lo) / 4))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (step * m) <= 6:
            step *= m
            break
    first = math.ceil(lo / step) * step
    out, t = [], first
    while t <= hi + 1e-12 * abs(step):
        out.append(t)
        t += step
    return out


def _label(t, log):
    if log:
        return f"1e{int(round(t))}" if float(t).is_integer() else f"{10 ** t:.3g}"
    return f"{t:.4g}"


def render(plot: Plot) -> str:
    ml, mr, mt, mb = 70, 170, 40, 55
    W, H = plot.width, plot.height
    pw, ph = W - ml - mr, H - mt - mb
    xs = [v for s in plot.series for v in s.x if _usable(v, plot.logx)]
    ys = [v for s in plot.series for v in s.y if _usable(v, plot.logy)]
    x0, x1 = _range(xs, plot.logx)
    y0, y1 = _range(ys, plot.logy)

    def px(v):
        t = math.log10(v) if plot.logx else v
        return ml + (t - x0) / (x1 - x0) * pw

    def py(v):
        t = math.log10(v) if plot.logy else v
        return mt + ph - (t - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{_f(ml + pw / 2)}" y="20" text-anchor="middle" font-size="13">'
        f'{escape(plot.title)}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1, plot.logx):
        x = ml + (t - x0) / (x1 - x0) * pw
        out.append(f'<line x1="{_f(x)}" y1="{mt + ph}" x2="{_f(x)}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_f(x)}" y="{mt + ph + 18}" text-anchor="middle">{_label(t, plot.logx)}</text>')
    for t in _ticks(y0, y1, plot.logy):
        y = mt + ph - (t - y0) / (y1 - y0) * ph
        out.append(f'<line x1="{ml - 5}" y1="{_f(y)}" x2="{ml}" y2="{_f(y)}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{_f(y + 4)}" text-anchor="end">{_label(t, plot.logy)}</text>')
    out.append(f'<text x="{_f(ml + pw / 2)}" y="{H - 12}" text-anchor="middle">{escape(plot.xlabel)}</text>')
    out.append(f'<text x="16" y="{_f(mt + ph / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_f(mt + ph / 2)})">{escape(plot.ylabel)}</text>')
    out.append(f'<clipPath id="plotarea"><rect x="{ml}" y="{mt}" width="{pw}" height="{ph}"/></clipPath>')
    for i, s in enumerate(plot.series):
        color = PALETTE[i % len(PALETTE)]
        pts = [(px(a), py(b)) for a, b in zip(s.x, s.y)
               if _usable(a, plot.logx) and _usable(b, plot.logy)]
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        if len(pts) > 1:
            coords = " ".join(f"{_f(a)},{_f(b)}" for a, b in pts)
            out.append(f'<polyline clip-path="url(#plotarea)" fill="none" stroke="{color}" '
                       f'stroke-width="1.6"{dash} points="{coords}"/>')
        if s.markers or len(pts) == 1:
            for a, b in pts:
                out.append(f'<circle clip-path="url(#plotarea)" cx="{_f(a)}" cy="{_f(b)}" r="2.5" fill="{color}"/>')
        ly = mt + 12 + 16 * i
        lx = ml + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 28}" y="{ly + 4}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
