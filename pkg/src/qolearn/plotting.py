"""Dependency-free SVG line charts for regret and ratio curves."""

from __future__ import annotations

import math

import numpy as np

WIDTH, HEIGHT = 800, 500
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 25, 45, 55
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2")


def _ticks(lo: float, hi: float, log_scale: bool) -> list[float]:
    if log_scale:
        lo_exp = math.floor(math.log10(max(lo, 1e-300)))
        hi_exp = math.ceil(math.log10(max(hi, 1e-300)))
        return [10.0 ** e for e in range(lo_exp, hi_exp + 1)]
    if hi == lo:
        return [lo]
    step = (hi - lo) / 5.0
    return [lo + i * step for i in range(6)]


def emit_svg_plot(
    curves: list[tuple[str, np.ndarray, np.ndarray]],
    path: str,
    title: str = "",
    x_label: str = "t",
    y_label: str = "",
    log_x: bool = False,
    log_y: bool = False,
) -> None:
    """Write a fixed-size polyline chart; curves are (label, xs, ys) triples."""
    xs_all = np.concatenate([np.asarray(xs, dtype=float) for _, xs, _ in curves])
    ys_all = np.concatenate([np.asarray(ys, dtype=float) for _, _, ys in curves])
    if log_x:
        xs_all = xs_all[xs_all > 0]
    if log_y:
        ys_all = ys_all[ys_all > 0]
    x_lo, x_hi = float(np.min(xs_all)), float(np.max(xs_all))
    y_lo, y_hi = float(np.min(ys_all)), float(np.max(ys_all))
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def tx(x: float) -> float:
        a, b = (math.log10(x_lo), math.log10(x_hi)) if log_x else (x_lo, x_hi)
        v = math.log10(x) if log_x else x
        return MARGIN_L + (v - a) / (b - a) * (WIDTH - MARGIN_L - MARGIN_R)

    def ty(y: float) -> float:
        a, b = (math.log10(y_lo), math.log10(y_hi)) if log_y else (y_lo, y_hi)
        v = math.log10(y) if log_y else y
        return HEIGHT - MARGIN_B - (v - a) / (b - a) * (HEIGHT - MARGIN_T - MARGIN_B)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'font-family="sans-serif" font-size="13">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" font-size="16">{title}</text>')
    # axes
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{HEIGHT - MARGIN_B}" x2="{WIDTH - MARGIN_R}" '
        f'y2="{HEIGHT - MARGIN_B}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{HEIGHT - MARGIN_B}" stroke="black"/>'
    )
    for tick in _ticks(x_lo, x_hi, log_x):
        if tick < x_lo or tick > x_hi:
            continue
        px = tx(tick)
        parts.append(f'<line x1="{px:.1f}" y1="{HEIGHT - MARGIN_B}" x2="{px:.1f}" y2="{HEIGHT - MARGIN_B + 5}" stroke="black"/>')
        parts.append(f'<text x="{px:.1f}" y="{HEIGHT - MARGIN_B + 20}" text-anchor="middle">{tick:g}</text>')
    for tick in _ticks(y_lo, y_hi, log_y):
        if tick < y_lo or tick > y_hi:
            continue
        py = ty(tick)
        parts.append(f'<line x1="{MARGIN_L - 5}" y1="{py:.1f}" x2="{MARGIN_L}" y2="{py:.1f}" stroke="black"/>')
        parts.append(f'<text x="{MARGIN_L - 8}" y="{py + 4:.1f}" text-anchor="end">{tick:.3g}</text>')
    parts.append(
        f'<text x="{(MARGIN_L + WIDTH - MARGIN_R) / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle">{x_label}</text>'
    )
    if y_label:
        parts.append(
            f'<text x="16" y="{(MARGIN_T + HEIGHT - MARGIN_B) / 2:.0f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {(MARGIN_T + HEIGHT - MARGIN_B) / 2:.0f})">{y_label}</text>'
        )
    for i, (label, xs, ys) in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        pts = []
        for x, y in zip(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)):
            if (log_x and x <= 0) or (log_y and y <= 0):
                continue
            pts.append(f"{tx(x):.2f},{ty(y):.2f}")
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        lx = WIDTH - MARGIN_R - 150
        lyy = MARGIN_T + 18 * i
        parts.append(f'<line x1="{lx}" y1="{lyy}" x2="{lx + 22}" y2="{lyy}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 28}" y="{lyy + 4}">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
