"""Dependency-free SVG line charts with linear axes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from html import escape

PALETTE = ("#1f77b4", "#d62728", "#e6b800", "#2ca02c", "#9467bd", "#8c564b")
GREY = "#888888"


@dataclass
class Series:
    x: list[float]
    y: list[float]
    label: str
    color: str
    line: bool = True
    markers: bool = False
    dashed: bool = False
    yerr: list[float] | None = None


@dataclass
class LineChart:
    title: str
    xlabel: str
    ylabel: str
    width: int = 640
    height: int = 440
    series: list[Series] = field(default_factory=list)
    vrules: list[tuple[float, str]] = field(default_factory=list)
    hrules: list[tuple[float, str]] = field(default_factory=list)

    def add(self, x, y, label, color=None, line=True, markers=False, dashed=False, yerr=None):
        errs = list(yerr) if yerr is not None else [0.0] * len(x)
        pts = [
            (float(a), float(b), float(e))
            for a, b, e in zip(x, y, errs)
            if math.isfinite(a) and math.isfinite(b)
        ]
        color = color or PALETTE[len(self.series) % len(PALETTE)]
        self.series.append(
            Series(
                [p[0] for p in pts], [p[1] for p in pts], label, color, line, markers, dashed,
                [p[2] for p in pts] if yerr is not None else None,
            )
        )

    def vrule(self, x: float, color: str = GREY):
        self.vrules.append((float(x), color))

    def hrule(self, y: float, color: str = GREY):
        self.hrules.append((float(y), color))

    def _limits(self):
        xs = [v for s in self.series for v in s.x] + [v for v, _ in self.vrules]
        ys = [v for s in self.series for v in s.y] + [v for v, _ in self.hrules]
        if not xs:
            xs, ys = [0.0, 1.0], [0.0, 1.0]

        def pad(lo, hi):
            if hi - lo < 1e-12:
                lo, hi = lo - 0.5, hi + 0.5
            span = hi - lo
            return lo - 0.04 * span, hi + 0.04 * span

        return pad(min(xs), max(xs)), pad(min(ys), max(ys))

    def render(self) -> str:
        left, right, top, bottom = 70, 160, 40, 55
        pw = self.width - left - right
        ph = self.height - top - bottom
        (x0, x1), (y0, y1) = self._limits()

        def X(v):
            return left + (v - x0) / (x1 - x0) * pw

        def Y(v):
            return top + ph - (v - y0) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="12">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
            f'<text x="{left + pw / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(self.title)}</text>',
            f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        ]
        for t in _ticks(x0, x1):
            out.append(f'<line x1="{X(t):.2f}" y1="{top + ph}" x2="{X(t):.2f}" y2="{top + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{X(t):.2f}" y="{top + ph + 18}" text-anchor="middle">{_label(t)}</text>')
        for t in _ticks(y0, y1):
            out.append(f'<line x1="{left - 5}" y1="{Y(t):.2f}" x2="{left}" y2="{Y(t):.2f}" stroke="black"/>')
            out.append(f'<text x="{left - 8}" y="{Y(t) + 4:.2f}" text-anchor="end">{_label(t)}</text>')
        out.append(f'<text x="{left + pw / 2:.2f}" y="{self.height - 15}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(
            f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
            f'transform="rotate(-90 18 {top + ph / 2:.2f})">{escape(self.ylabel)}</text>'
        )
        for v, color in self.vrules:
            out.append(f'<line x1="{X(v):.2f}" y1="{top}" x2="{X(v):.2f}" y2="{top + ph}" stroke="{color}" stroke-width="1.5"/>')
        for v, color in self.hrules:
            out.append(f'<line x1="{left}" y1="{Y(v):.2f}" x2="{left + pw}" y2="{Y(v):.2f}" stroke="{color}" stroke-width="1.5"/>')
        for i, s in enumerate(self.series):
            pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(s.x, s.y))
            if s.line and len(s.x) > 1:
                dash = ' stroke-dasharray="6,4"' if s.dashed else ""
                out.append(f'<polyline points="{pts}" fill="none" stroke="{s.color}" stroke-width="1.5"{dash}/>')
            if s.yerr is not None:
                for a, b, e in zip(s.x, s.y, s.yerr):
                    if e > 0:
                        out.append(
                            f'<line x1="{X(a):.2f}" y1="{Y(b - e):.2f}" x2="{X(a):.2f}" '
                            f'y2="{Y(b + e):.2f}" stroke="{s.color}"/>'
                        )
            if s.markers:
                for a, b in zip(s.x, s.y):
                    out.append(f'<circle cx="{X(a):.2f}" cy="{Y(b):.2f}" r="3" fill="{s.color}"/>')
            ly = top + 14 + 18 * i
            lx = left + pw + 12
            out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{s.color}" stroke-width="2"/>')
            out.append(f'<text x="{lx + 26}" y="{ly}">{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _label(v: float) -> str:
    return f"{v:.6g}"
