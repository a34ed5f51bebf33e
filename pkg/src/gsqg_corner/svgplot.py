"""Dependency-free SVG emission for curve plots and contour frames."""

from __future__ import annotations

import math

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
_GHOST = "#b0b0b0"


def _fmt(x: float) -> str:
    return format(x, ".6g")


def _polyline(xs, ys, color, width, closed=False, dashed=False):
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))
    tag = "polygon" if closed else "polyline"
    dash = ' stroke-dasharray="4 3"' if dashed else ""
    return (
        f'<{tag} points="{pts}" fill="none" stroke="{color}" '
        f'stroke-width="{width}"{dash} />'
    )


def line_plot_svg(curves, title="", width=640, height=480, margin=54):
    """Axis-annotated line plot.  ``curves`` is a list of (label, xs, ys)."""
    xs_all = [x for _, xs, _ in curves for x in xs]
    ys_all = [y for _, _, ys in curves for y in ys]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def py(y):
        return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white" />',
    ]
    # axes
    parts.append(_polyline([margin, margin], [margin, height - margin], "#000", 1))
    parts.append(_polyline([margin, width - margin], [height - margin, height - margin], "#000", 1))
    if y0 < 0 < y1:
        parts.append(_polyline([margin, width - margin], [py(0), py(0)], "#999", 0.7, dashed=True))
    for k in range(5):
        xv = x0 + k * (x1 - x0) / 4
        yv = y0 + k * (y1 - y0) / 4
        parts.append(
            f'<text x="{_fmt(px(xv))}" y="{height - margin + 16}" font-size="11" '
            f'text-anchor="middle">{_fmt(xv)}</text>'
        )
        parts.append(
            f'<text x="{margin - 6}" y="{_fmt(py(yv) + 4)}" font-size="11" '
            f'text-anchor="end">{_fmt(yv)}</text>'
        )
    for k, (label, xs, ys) in enumerate(curves):
        color = _COLORS[k % len(_COLORS)]
        parts.append(_polyline([px(x) for x in xs], [py(y) for y in ys], color, 1.5))
        parts.append(
            f'<text x="{width - margin - 4}" y="{margin + 16 * (k + 1)}" font-size="12" '
            f'text-anchor="end" fill="{color}">{label}</text>'
        )
    if title:
        parts.append(
            f'<text x="{width / 2}" y="{margin - 16}" font-size="14" '
            f'text-anchor="middle">{title}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def contour_frame_svg(snapshots, half_extent, title="", size=640):
    """Stroke-only contour frames in the fixed viewport [-L, L]^2.

    ``snapshots`` is a list of (label, nodes); the first entry is drawn as
    a gray ghost, later ones follow a color ramp.
    """
    L = half_extent

    def px(x):
        return (x + L) / (2 * L) * size

    def py(y):
        return size - (y + L) / (2 * L) * size

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white" />',
        _polyline([px(-L), px(L)], [py(0), py(0)], "#ddd", 0.7),
        _polyline([px(0), px(0)], [py(-L), py(L)], "#ddd", 0.7),
    ]
    for k, (label, nodes) in enumerate(snapshots):
        color = _GHOST if k == 0 and len(snapshots) > 1 else _COLORS[k % len(_COLORS)]
        parts.append(
            _polyline([px(p[0]) for p in nodes], [py(p[1]) for p in nodes], color, 1.2, closed=True)
        )
        parts.append(
            f'<text x="8" y="{16 * (k + 1)}" font-size="12" fill="{color}">{label}</text>'
        )
    if title:
        parts.append(
            f'<text x="{size / 2}" y="20" font-size="14" text-anchor="middle">{title}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
