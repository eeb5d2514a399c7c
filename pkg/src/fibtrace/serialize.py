"""Deterministic CSV / JSON / SVG emission.

Reals are written with 17 significant digits so that every 64-bit float
round-trips exactly; re-running an identical configuration reproduces
output files byte for byte (no timestamps anywhere).
"""

from __future__ import annotations

import io
import json


def fmt(x) -> str:
    """Format a number for CSV; floats get 17 significant digits."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return format(x, ".17g")
    if isinstance(x, complex):
        return f"{format(x.real, '.17g')}{'+' if x.imag >= 0 else '-'}{format(abs(x.imag), '.17g')}j"
    return str(x)


def csv_text(header, rows) -> str:
    """Render rows (iterables of scalars) as UTF-8 CSV text with a header."""
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text(header, rows))


def write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _svg_header(width, height):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n')


def svg_polyline_plot(path, curves, circles=(), width=640, height=640,
                      title="", equal_aspect=True) -> None:
    """Self-contained SVG with polyline curves and optional circles.

    curves: list of (xs, ys, color) in data coordinates.
    circles: list of (cx, cy, r, color) in data coordinates.
    """
    xs_all, ys_all = [], []
    for xs, ys, _ in curves:
        xs_all.extend(float(v) for v in xs)
        ys_all.extend(float(v) for v in ys)
    for cx, cy, r, _ in circles:
        xs_all.extend([cx - r, cx + r])
        ys_all.extend([cy - r, cy + r])
    if not xs_all:
        xs_all = ys_all = [0.0, 1.0]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    pad_x = (x1 - x0) * 0.05 or 1.0
    pad_y = (y1 - y0) * 0.05 or 1.0
    x0, x1 = x0 - pad_x, x1 + pad_x
    y0, y1 = y0 - pad_y, y1 + pad_y
    if equal_aspect:
        span = max(x1 - x0, y1 - y0)
        cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
        x0, x1 = cx - span / 2, cx + span / 2
        y0, y1 = cy - span / 2, cy + span / 2
    margin = 40.0
    sx = (width - 2 * margin) / (x1 - x0)
    sy = (height - 2 * margin) / (y1 - y0)

    def to_px(x, y):
        return margin + (x - x0) * sx, height - margin - (y - y0) * sy

    parts = [_svg_header(width, height)]
    if title:
        parts.append(f'<text x="{width / 2}" y="20" text-anchor="middle" '
                     f'font-family="monospace" font-size="13">{title}</text>\n')
    for cx, cy, r, color in circles:
        px, py = to_px(cx, cy)
        parts.append(f'<circle cx="{px:.3f}" cy="{py:.3f}" r="{abs(r * sx):.3f}" '
                     f'fill="none" stroke="{color}" stroke-width="1"/>\n')
    for xs, ys, color in curves:
        pts = " ".join("{:.3f},{:.3f}".format(*to_px(float(x), float(y)))
                       for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.2"/>\n')
    parts.append("</svg>\n")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(parts))
