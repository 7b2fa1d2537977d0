"""Minimal deterministic SVG line/scatter plots, no plotting library.

Plots are documentation artifacts; identical inputs produce identical
bytes. Axis extents always cover the data and appear in a machine-
readable comment for tooling.
"""

import math

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _fmt(x: float) -> str:
    return format(float(x), ".6g")


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        lo_e = math.floor(math.log10(lo))
        hi_e = math.ceil(math.log10(hi))
        return [10.0 ** e for e in range(lo_e, hi_e + 1)]
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / 4)) if span > 0 else 1.0
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 6:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    ticks, t = [], start
    while t <= hi + 1e-12 * max(1.0, abs(hi)):
        ticks.append(t)
        t += step
    return ticks


def render_plot(
    series: list[tuple[str, list[float], list[float]]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    log_x: bool = False,
    log_y: bool = False,
) -> str:
    """SVG text for labeled (x, y) series drawn as lines with markers."""
    if not series or all(len(xs) == 0 for _, xs, _ in series):
        raise ValueError("nothing to plot")
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if log_x and min(xs_all) <= 0 or log_y and min(ys_all) <= 0:
        raise ValueError("log axis requires positive data")

    def span(vals, log):
        lo, hi = min(vals), max(vals)
        if lo == hi:
            pad = abs(lo) * 0.1 + (0.0 if log else 1.0)
            lo, hi = (lo / 2, hi * 2) if log else (lo - pad, hi + pad)
        return lo, hi

    x_lo, x_hi = span(xs_all, log_x)
    y_lo, y_hi = span(ys_all, log_y)

    def tx(x):
        f = (math.log10(x) - math.log10(x_lo)) / (math.log10(x_hi) - math.log10(x_lo)) if log_x else (
            (x - x_lo) / (x_hi - x_lo)
        )
        return _ML + f * (_W - _ML - _MR)

    def ty(y):
        f = (math.log10(y) - math.log10(y_lo)) / (math.log10(y_hi) - math.log10(y_lo)) if log_y else (
            (y - y_lo) / (y_hi - y_lo)
        )
        return _H - _MB - f * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="12">',
        f"<!-- xrange {_fmt(x_lo)} {_fmt(x_hi)} yrange {_fmt(y_lo)} {_fmt(y_hi)} -->",
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="18" text-anchor="middle">{title}</text>',
        f'<text x="{_W // 2}" y="{_H - 12}" text-anchor="middle">{x_label}</text>',
        f'<text x="14" y="{_H // 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {_H // 2})">{y_label}</text>',
    ]
    ax_col = "#444444"
    for t in _ticks(x_lo, x_hi, log_x):
        if t < x_lo - 1e-12 or t > x_hi * (1 + 1e-12) + 1e-12:
            continue
        px = tx(t)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{_MT}" x2="{_fmt(px)}" y2="{_H - _MB}" '
            f'stroke="#dddddd"/>'
        )
        out.append(
            f'<text x="{_fmt(px)}" y="{_H - _MB + 16}" text-anchor="middle">{_fmt(t)}</text>'
        )
    for t in _ticks(y_lo, y_hi, log_y):
        if t < y_lo - 1e-12 or t > y_hi * (1 + 1e-12) + 1e-12:
            continue
        py = ty(t)
        out.append(
            f'<line x1="{_ML}" y1="{_fmt(py)}" x2="{_W - _MR}" y2="{_fmt(py)}" stroke="#dddddd"/>'
        )
        out.append(
            f'<text x="{_ML - 6}" y="{_fmt(py + 4)}" text-anchor="end">{_fmt(t)}</text>'
        )
    out.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        f'fill="none" stroke="{ax_col}"/>'
    )
    for i, (label, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{_fmt(tx(x))},{_fmt(ty(y))}" for x, y in sorted(zip(xs, ys)))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            out.append(f'<circle cx="{_fmt(tx(x))}" cy="{_fmt(ty(y))}" r="3" fill="{color}"/>')
        out.append(
            f'<text x="{_W - _MR - 8}" y="{_MT + 16 + 14 * i}" text-anchor="end" '
            f'fill="{color}">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
