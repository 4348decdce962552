"""Deterministic single-curve SVG emission for trend curves.

The horizontal axis is log10(c); reversal intervals are shaded, the zero
line is drawn, and each sign crossing is annotated.  No timestamps or
random identifiers appear in the output, so files are golden-test stable.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .ridge import Regime, TrendCurve

_W, _H = 720.0, 360.0
_MARGIN = 44.0


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def zero_crossings(curve: TrendCurve) -> list[float]:
    """Geometric midpoints of grid cells where the sampled trend flips sign."""
    cs, vals = curve.cs, curve.values
    out = []
    for a in range(len(cs) - 1):
        va, vb = vals[a], vals[a + 1]
        if va == 0.0 or va * vb >= 0.0:
            continue
        out.append(float(math.sqrt(cs[a] * cs[a + 1])))
    return out


def trend_curve_svg(curve: TrendCurve, regime: Regime | None = None) -> str:
    """Render a trend curve with shaded reversal regions as an SVG string."""
    cs = curve.cs
    vals = curve.values
    if cs.size < 2:
        raise ValueError("need at least two samples to draw a curve")
    x0, x1 = math.log10(cs[0]), math.log10(cs[-1])
    vmax = float(np.abs(vals).max())
    if vmax == 0.0:
        vmax = 1.0
    y0, y1 = -1.1 * vmax, 1.1 * vmax

    def sx(logc: float) -> float:
        return _MARGIN + (logc - x0) / (x1 - x0) * (_W - 2 * _MARGIN)

    def sy(v: float) -> float:
        return _H - _MARGIN - (v - y0) / (y1 - y0) * (_H - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W:.0f}" height="{_H:.0f}" '
        f'viewBox="0 0 {_W:.0f} {_H:.0f}">',
        f'<rect width="{_W:.0f}" height="{_H:.0f}" fill="white"/>',
    ]

    if regime is not None:
        for iv in regime.intervals:
            lo = max(float(iv.lo), float(cs[0]))
            hi = float(cs[-1]) if iv.unbounded else min(float(iv.hi), float(cs[-1]))
            if hi <= lo:
                continue
            xa, xb = sx(math.log10(lo)), sx(math.log10(hi))
            parts.append(
                f'<rect x="{_fmt(xa)}" y="{_fmt(_MARGIN)}" width="{_fmt(xb - xa)}" '
                f'height="{_fmt(_H - 2 * _MARGIN)}" fill="#d62728" fill-opacity="0.15"/>'
            )

    zero_y = sy(0.0)
    parts.append(
        f'<line x1="{_fmt(_MARGIN)}" y1="{_fmt(zero_y)}" x2="{_fmt(_W - _MARGIN)}" '
        f'y2="{_fmt(zero_y)}" stroke="#888888" stroke-width="1" stroke-dasharray="4 3"/>'
    )

    points = " ".join(
        f"{_fmt(sx(math.log10(c)))},{_fmt(sy(v))}" for c, v in zip(cs, vals)
    )
    parts.append(
        f'<polyline points="{points}" fill="none" stroke="#1f77b4" stroke-width="1.6"/>'
    )

    for cross in zero_crossings(curve):
        xc = sx(math.log10(cross))
        parts.append(
            f'<line x1="{_fmt(xc)}" y1="{_fmt(_MARGIN)}" x2="{_fmt(xc)}" '
            f'y2="{_fmt(_H - _MARGIN)}" stroke="#d62728" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(xc + 4)}" y="{_fmt(_MARGIN + 14)}" font-size="11" '
            f'fill="#d62728">c = {cross:.6g}</text>'
        )

    parts.append(
        f'<text x="{_fmt(_MARGIN)}" y="{_fmt(_H - 10)}" font-size="11" fill="#333333">'
        f"log10(c) from {x0:.2f} to {x1:.2f}; trend of variable {curve.variable}; "
        f"no-regularization trend {curve.true_trend:.6g}</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
