"""Minimal deterministic SVG emission for scatter plots and bar charts.

Hand-rolled so figures are plain text, diffable, and reproducible byte for
byte; no plotting dependency.
"""

from __future__ import annotations

from typing import Sequence

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 70


def _esc(s: str) -> str:
    return (str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def _header(title: str) -> list[str]:
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" '
        f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        lines.append(f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="15">{_esc(title)}</text>')
    return lines


def _axis_range(lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        pad = 1.0 if lo == 0 else abs(lo) * 0.1
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.08
    return lo - pad, hi + pad


def scatter_svg(xs: Sequence[float], ys: Sequence[float], labels: Sequence[str],
                xlabel: str = "dim_0", ylabel: str = "dim_1", title: str = "",
                images: Sequence[str] | None = None, image_size: int = 36) -> str:
    """Scatter of labeled points; optional thumbnail image per point."""
    if len(xs) != len(ys) or len(xs) != len(labels):
        raise ValueError("xs, ys and labels must have equal length")
    x0, x1 = _axis_range(min(xs), max(xs))
    y0, y1 = _axis_range(min(ys), max(ys))
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(x: float) -> float:
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def py(y: float) -> float:
        return HEIGHT - MARGIN_B - (y - y0) / (y1 - y0) * ph

    lines = _header(title)
    lines.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
                 f'fill="none" stroke="#444"/>')
    for frac, val in ((0.0, x0), (0.5, (x0 + x1) / 2), (1.0, x1)):
        lines.append(f'<text x="{MARGIN_L + frac * pw:.1f}" y="{HEIGHT - MARGIN_B + 18}" '
                     f'text-anchor="middle" font-family="sans-serif" font-size="11">{val:.3g}</text>')
    for frac, val in ((0.0, y0), (0.5, (y0 + y1) / 2), (1.0, y1)):
        lines.append(f'<text x="{MARGIN_L - 8}" y="{HEIGHT - MARGIN_B - frac * ph:.1f}" '
                     f'text-anchor="end" font-family="sans-serif" font-size="11">{val:.3g}</text>')
    lines.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 18}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13">{_esc(xlabel)}</text>')
    lines.append(f'<text x="20" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 20 {MARGIN_T + ph / 2:.1f})">{_esc(ylabel)}</text>')
    for i, (x, y, lbl) in enumerate(zip(xs, ys, labels)):
        cx, cy = px(x), py(y)
        if images is not None and images[i]:
            h = image_size / 2
            lines.append(f'<image x="{cx - h:.1f}" y="{cy - h:.1f}" width="{image_size}" '
                         f'height="{image_size}" xlink:href="{_esc(images[i])}"/>')
        lines.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="4" fill="#1f77b4" '
                     f'fill-opacity="0.8"/>')
        lines.append(f'<text x="{cx + 6:.1f}" y="{cy - 6:.1f}" font-family="sans-serif" '
                     f'font-size="10" fill="#333">{_esc(lbl)}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def bar_chart_svg(labels: Sequence[str], values: Sequence[float],
                  title: str = "", ylabel: str = "") -> str:
    """Vertical bar chart with value labels on top of each bar."""
    if len(labels) != len(values):
        raise ValueError("labels and values must have equal length")
    if not labels:
        raise ValueError("empty chart")
    vmax = max(max(values), 0.0)
    if vmax == 0:
        vmax = 1.0
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B
    n = len(values)
    slot = pw / n
    bar_w = slot * 0.6
    lines = _header(title)
    lines.append(f'<line x1="{MARGIN_L}" y1="{HEIGHT - MARGIN_B}" x2="{MARGIN_L + pw}" '
                 f'y2="{HEIGHT - MARGIN_B}" stroke="#444"/>')
    lines.append(f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" '
                 f'y2="{HEIGHT - MARGIN_B}" stroke="#444"/>')
    for frac in (0.0, 0.5, 1.0):
        val = vmax * 1.08 * frac
        y = HEIGHT - MARGIN_B - frac * ph
        lines.append(f'<text x="{MARGIN_L - 8}" y="{y:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{val:.3g}</text>')
    if ylabel:
        lines.append(f'<text x="20" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="13" '
                     f'transform="rotate(-90 20 {MARGIN_T + ph / 2:.1f})">{_esc(ylabel)}</text>')
    for i, (lbl, val) in enumerate(zip(labels, values)):
        h = (val / (vmax * 1.08)) * ph if val > 0 else 0.0
        x = MARGIN_L + i * slot + (slot - bar_w) / 2
        y = HEIGHT - MARGIN_B - h
        lines.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{h:.1f}" '
                     f'fill="#1f77b4"/>')
        lines.append(f'<text x="{x + bar_w / 2:.1f}" y="{y - 5:.1f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="10">{val:.4g}</text>')
        lines.append(f'<text x="{x + bar_w / 2:.1f}" y="{HEIGHT - MARGIN_B + 16}" '
                     f'text-anchor="end" font-family="sans-serif" font-size="10" '
                     f'transform="rotate(-35 {x + bar_w / 2:.1f} {HEIGHT - MARGIN_B + 16})">'
                     f'{_esc(lbl)}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
