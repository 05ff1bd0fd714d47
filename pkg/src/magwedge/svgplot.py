"""Minimal self-contained SVG output: line charts and triangle heatmaps."""

from __future__ import annotations

import math

import numpy as np

W, H = 640, 420
PAD = dict(left=70, right=150, top=30, bottom=50)
COLORS = ["#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#555555"]


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _header(title):
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="14">{title}</text>']


def line_chart(path, series, title="", xlabel="", ylabel=""):
    """``series``: list of ``(label, xs, ys, dashed)``; nan points are skipped."""
    xs_all = np.concatenate([np.asarray(s[1], float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], float) for s in series])
    ok = np.isfinite(xs_all) & np.isfinite(ys_all)
    x0, x1 = xs_all[ok].min(), xs_all[ok].max()
    y0, y1 = ys_all[ok].min(), ys_all[ok].max()
    dy = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - dy, y1 + dy
    pw = W - PAD["left"] - PAD["right"]
    ph = H - PAD["top"] - PAD["bottom"]

    def X(x):
        return PAD["left"] + pw * (x - x0) / ((x1 - x0) or 1.0)

    def Y(y):
        return PAD["top"] + ph * (1 - (y - y0) / ((y1 - y0) or 1.0))

    out = _header(title)
    out.append(f'<rect x="{PAD["left"]}" y="{PAD["top"]}" width="{pw}" height="{ph}" '
               'fill="none" stroke="black"/>')
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{X(t):.1f}" y1="{PAD["top"] + ph}" x2="{X(t):.1f}" '
                   f'y2="{PAD["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X(t):.1f}" y="{PAD["top"] + ph + 18}" '
                   f'text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{PAD["left"] - 5}" y1="{Y(t):.1f}" x2="{PAD["left"]}" '
                   f'y2="{Y(t):.1f}" stroke="black"/>')
        out.append(f'<text x="{PAD["left"] - 8}" y="{Y(t) + 4:.1f}" '
                   f'text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{PAD["left"] + pw / 2}" y="{H - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="15" y="{PAD["top"] + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {PAD["top"] + ph / 2})">{ylabel}</text>')
    for i, (label, xs, ys, dashed) in enumerate(series):
        c = COLORS[i % len(COLORS)]
        pts = [f"{X(x):.2f},{Y(y):.2f}" for x, y in zip(xs, ys)
               if math.isfinite(x) and math.isfinite(y)]
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        out.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{c}" '
                   f'stroke-width="1.5"{dash}/>')
        ly = PAD["top"] + 15 + 18 * i
        out.append(f'<line x1="{W - PAD["right"] + 10}" y1="{ly}" x2="{W - PAD["right"] + 35}" '
                   f'y2="{ly}" stroke="{c}" stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{W - PAD["right"] + 40}" y="{ly + 4}">{label}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def _color(v):
    # blue -> white -> red ramp on [0, 1]
    v = min(max(v, 0.0), 1.0)
    if v < 0.5:
        a = v / 0.5
        r, g, b = int(40 + 215 * a), int(70 + 185 * a), 255
    else:
        a = (v - 0.5) / 0.5
        r, g, b = 255, int(255 - 200 * a), int(255 - 215 * a)
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(path, nodes, elements, values, title="", line=None, max_triangles=40000):
    """Flat-shaded triangles coloured by the mean nodal value.

    ``line`` is an optional ``(point, direction)`` pair drawn dashed.
    Large meshes are thinned by drawing every k-th triangle.
    """
    nodes = np.asarray(nodes, float)
    vals = np.asarray(values, float)
    x0, y0 = nodes.min(0)
    x1, y1 = nodes.max(0)
    pw = W - PAD["left"] - PAD["right"]
    ph = H - PAD["top"] - PAD["bottom"]
    s = min(pw / ((x1 - x0) or 1.0), ph / ((y1 - y0) or 1.0))

    def P(x, y):
        return PAD["left"] + s * (x - x0), PAD["top"] + ph - s * (y - y0)

    lo, hi = np.nanmin(vals), np.nanmax(vals)
    out = _header(title)
    stride = max(1, len(elements) // max_triangles)
    for tri in elements[::stride]:
        v = (vals[tri].mean() - lo) / ((hi - lo) or 1.0)
        pts = " ".join("%.1f,%.1f" % P(*nodes[j]) for j in tri)
        col = _color(v)
        out.append(f'<polygon points="{pts}" fill="{col}" stroke="{col}" stroke-width="0.3"/>')
    if line is not None:
        (px, py), (dx, dy) = line
        big = 4 * max(x1 - x0, y1 - y0)
        a = P(px - big * dx, py - big * dy)
        b = P(px + big * dx, py + big * dy)
        out.append(f'<clipPath id="c"><rect x="{PAD["left"]}" y="{PAD["top"]}" '
                   f'width="{pw}" height="{ph}"/></clipPath>')
        out.append(f'<line x1="{a[0]:.1f}" y1="{a[1]:.1f}" x2="{b[0]:.1f}" y2="{b[1]:.1f}" '
                   'stroke="black" stroke-dasharray="6,4" clip-path="url(#c)"/>')
    for i, (lab, v) in enumerate([("max", hi), ("min", lo)]):
        out.append(f'<rect x="{W - PAD["right"] + 10}" y="{PAD["top"] + 20 * i}" width="14" '
                   f'height="14" fill="{_color(1.0 - i)}"/>')
        out.append(f'<text x="{W - PAD["right"] + 30}" y="{PAD["top"] + 20 * i + 11}">'
                   f'{lab} {v:.3g}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
