"""Hand-emitted static SVG scatter plots with error bars.

Byte-identical output for identical inputs: every coordinate is formatted
with a fixed precision and series are drawn in input order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 160, 30, 55

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    label: str
    # each point: (x, y, x_lo, x_hi, y_lo, y_hi)
    points: list[tuple[float, float, float, float, float, float]] = field(default_factory=list)


def _fx(x: float) -> float:
    return MARGIN_L + x * (WIDTH - MARGIN_L - MARGIN_R)


def _fy(y: float) -> float:
    return HEIGHT - MARGIN_B - y * (HEIGHT - MARGIN_T - MARGIN_B)


def _f(v: float) -> str:
    return f"{v:.2f}"


def scatter_svg(series: list[Series], x_label: str, y_label: str, title: str = "") -> str:
    """Render unit-square scatter data as a standalone SVG document."""
    if not series or all(not s.points for s in series):
        raise ValueError("nothing to plot")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    # axes and ticks at 0, 0.25, ..., 1
    parts.append(
        f'<line x1="{_f(_fx(0))}" y1="{_f(_fy(0))}" x2="{_f(_fx(1))}" y2="{_f(_fy(0))}" '
        'stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_f(_fx(0))}" y1="{_f(_fy(0))}" x2="{_f(_fx(0))}" y2="{_f(_fy(1))}" '
        'stroke="black" stroke-width="1"/>'
    )
    for i in range(5):
        v = i / 4
        parts.append(
            f'<line x1="{_f(_fx(v))}" y1="{_f(_fy(0))}" x2="{_f(_fx(v))}" y2="{_f(_fy(0) + 5)}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_f(_fx(v))}" y="{_f(_fy(0) + 18)}" font-size="11" '
            f'text-anchor="middle">{v:g}</text>'
        )
        parts.append(
            f'<line x1="{_f(_fx(0) - 5)}" y1="{_f(_fy(v))}" x2="{_f(_fx(0))}" y2="{_f(_fy(v))}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_f(_fx(0) - 8)}" y="{_f(_fy(v) + 4)}" font-size="11" '
            f'text-anchor="end">{v:g}</text>'
        )
    parts.append(
        f'<text x="{_f((_fx(0) + _fx(1)) / 2)}" y="{HEIGHT - 10}" font-size="13" '
        f'text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="18" y="{_f((_fy(0) + _fy(1)) / 2)}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 18 {_f((_fy(0) + _fy(1)) / 2)})">{y_label}</text>'
    )
    if title:
        parts.append(
            f'<text x="{_f((_fx(0) + _fx(1)) / 2)}" y="20" font-size="14" '
            f'text-anchor="middle">{title}</text>'
        )

    for si, s in enumerate(series):
        color = PALETTE[si % len(PALETTE)]
        for x, y, x_lo, x_hi, y_lo, y_hi in s.points:
            px, py = _fx(x), _fy(y)
            if x_hi > x_lo:
                parts.append(
                    f'<line x1="{_f(_fx(x_lo))}" y1="{_f(py)}" x2="{_f(_fx(x_hi))}" '
                    f'y2="{_f(py)}" stroke="{color}" stroke-width="1"/>'
                )
            if y_hi > y_lo:
                parts.append(
                    f'<line x1="{_f(px)}" y1="{_f(_fy(y_lo))}" x2="{_f(px)}" '
                    f'y2="{_f(_fy(y_hi))}" stroke="{color}" stroke-width="1"/>'
                )
            parts.append(f'<circle cx="{_f(px)}" cy="{_f(py)}" r="4" fill="{color}"/>')
        ly = MARGIN_T + 18 * si + 12
        lx = WIDTH - MARGIN_R + 14
        parts.append(f'<circle cx="{lx}" cy="{ly}" r="4" fill="{color}"/>')
        parts.append(f'<text x="{lx + 10}" y="{ly + 4}" font-size="12">{s.label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
