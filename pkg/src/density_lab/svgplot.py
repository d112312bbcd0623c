"""Minimal dependency-free SVG charts.

Each plotted series renders as exactly one ``<path>`` element (scatter
series draw every marker as subpaths of a single path), which keeps the
output easy to assert on. Axes, ticks, and labels use ``<line>`` and
``<text>``. Output is deterministic: coordinates are formatted to fixed
precision and nothing depends on dict ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

from density_lab.errors import ValidationError

_PALETTE = ("#1b6ca8", "#d1495b", "#3a7d44", "#8d5a97", "#c77d2e", "#3b3b3b")

_WIDTH = 820
_HEIGHT = 520
_MARGIN_LEFT = 78
_MARGIN_RIGHT = 24
_MARGIN_TOP = 46
_MARGIN_BOTTOM = 58
_MARKER = 3.5


@dataclass(frozen=True)
class Series:
    """One plottable series: scatter markers or a connected line."""

    name: str
    points: tuple[tuple[float, float], ...]
    kind: str = "scatter"

    def __post_init__(self) -> None:
        if self.kind not in ("scatter", "line"):
            raise ValidationError(f"kind: expected 'scatter' or 'line', got {self.kind!r}")
        if not self.points:
            raise ValidationError(f"series {self.name!r}: no points")
        for x, y in self.points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValidationError(f"series {self.name!r}: non-finite point")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + step * 1e-9:
        ticks.append(0.0 if abs(v) < step * 1e-9 else v)
        v += step
    return ticks


def _decade_ticks(lo: float, hi: float) -> list[float]:
    ticks = []
    k = math.floor(math.log10(lo))
    while 10.0 ** k <= hi * (1 + 1e-12):
        if 10.0 ** k >= lo * (1 - 1e-12):
            ticks.append(10.0 ** k)
        k += 1
    if not ticks:
        ticks = [lo, hi]
    return ticks


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


def render_chart(
    series,
    title: str,
    x_label: str,
    y_label: str,
    annotations=(),
    log_y: bool = False,
) -> str:
    """Render series into a standalone SVG document string."""
    series = list(series)
    if not series:
        raise ValidationError("render_chart: no series")
    xs = [x for s in series for x, _ in s.points]
    ys = [y for s in series for _, y in s.points]
    if log_y and min(ys) <= 0:
        raise ValidationError("log_y: all y values must be > 0")

    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    ty = [math.log10(y) for y in ys] if log_y else ys
    y_lo, y_hi = min(ty), max(ty)
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    x_pad = 0.04 * (x_hi - x_lo)
    y_pad = 0.06 * (y_hi - y_lo)
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(x: float) -> float:
        return _MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        v = math.log10(y) if log_y else y
        return _MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h

    out: list[str] = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="sans-serif">'
    )
    out.append(f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>')
    out.append(
        f'<text x="{_WIDTH / 2:.1f}" y="26" text-anchor="middle" font-size="16">{escape(title)}</text>'
    )

    frame = (
        (_MARGIN_LEFT, _MARGIN_TOP, _MARGIN_LEFT, _MARGIN_TOP + plot_h),
        (_MARGIN_LEFT, _MARGIN_TOP + plot_h, _MARGIN_LEFT + plot_w, _MARGIN_TOP + plot_h),
    )
    for x1, y1, x2, y2 in frame:
        out.append(
            f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#222222" stroke-width="1"/>'
        )

    x_ticks = _nice_ticks(x_lo + x_pad, x_hi - x_pad)
    for tick in x_ticks:
        px = sx(tick)
        base = _MARGIN_TOP + plot_h
        out.append(f'<line x1="{_fmt(px)}" y1="{base}" x2="{_fmt(px)}" y2="{base + 5}" stroke="#222222"/>')
        out.append(
            f'<text x="{_fmt(px)}" y="{base + 20}" text-anchor="middle" font-size="11">{escape(_tick_label(tick))}</text>'
        )
    if log_y:
        y_ticks = _decade_ticks(10.0 ** (y_lo + y_pad), 10.0 ** (y_hi - y_pad))
    else:
        y_ticks = _nice_ticks(y_lo + y_pad, y_hi - y_pad)
    for tick in y_ticks:
        py = sy(tick)
        out.append(
            f'<line x1="{_MARGIN_LEFT - 5}" y1="{_fmt(py)}" x2="{_MARGIN_LEFT}" y2="{_fmt(py)}" stroke="#222222"/>'
        )
        out.append(
            f'<text x="{_MARGIN_LEFT - 9}" y="{_fmt(py + 4)}" text-anchor="end" font-size="11">{escape(_tick_label(tick))}</text>'
        )

    out.append(
        f'<text x="{_MARGIN_LEFT + plot_w / 2:.1f}" y="{_HEIGHT - 14}" text-anchor="middle" font-size="12">{escape(x_label)}</text>'
    )
    out.append(
        f'<text x="20" y="{_MARGIN_TOP + plot_h / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 20 {_MARGIN_TOP + plot_h / 2:.1f})">{escape(y_label)}</text>'
    )

    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        if s.kind == "line":
            pts = sorted(s.points)
            d = "M " + " L ".join(f"{_fmt(sx(x))} {_fmt(sy(y))}" for x, y in pts)
            out.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        else:
            parts = []
            for x, y in s.points:
                px, py = sx(x), sy(y)
                parts.append(
                    f"M {_fmt(px - _MARKER)} {_fmt(py)} L {_fmt(px + _MARKER)} {_fmt(py)} "
                    f"M {_fmt(px)} {_fmt(py - _MARKER)} L {_fmt(px)} {_fmt(py + _MARKER)}"
                )
            out.append(
                f'<path d="{" ".join(parts)}" fill="none" stroke="{color}" stroke-width="1.6"/>'
            )

    legend_y = _MARGIN_TOP + 6
    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        out.append(
            f'<text x="{_MARGIN_LEFT + plot_w - 8}" y="{legend_y + 16 * i}" text-anchor="end" '
            f'font-size="11" fill="{color}">{escape(s.name)}</text>'
        )

    ann_y = _MARGIN_TOP + 6
    for j, note in enumerate(annotations):
        out.append(
            f'<text x="{_MARGIN_LEFT + 10}" y="{ann_y + 15 * j}" font-size="12" fill="#333333">{escape(str(note))}</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"
