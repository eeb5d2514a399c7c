"""Complex connected components of |x_k(z)| <= 1 + delta and ball inclusions.

Around a simple zero E_k, the level set |x_k| = 1 + delta bounds a
component whose inscribed and circumscribed radii are pinned between the
distortion-ball radii derived from |x_k'(E_k)|.  The boundary is traced by
marching squares on a symmetric grid and each vertex is then driven onto
the level set along the modulus gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from skimage.measure import find_contours

from fibtrace._recursion import xk_and_derivative, xk_value
from fibtrace.serialize import csv_text, svg_polyline_plot
from fibtrace.trace_map import growth_rate


class ContourError(ArithmeticError):
    """Component could not be resolved inside the search box."""


@dataclass
class ComponentContour:
    """Closed boundary polyline of one component of |x_k| <= 1 + delta."""

    k: int
    delta: float
    center: complex
    polyline: np.ndarray = field(repr=False)   # closed: first point repeated last
    inscribed_radius: float = 0.0
    circumscribed_radius: float = 0.0
    lam: float = 0.0

    @property
    def level(self) -> float:
        return 1.0 + self.delta


def koebe_bounds(k: int, delta: float, derivative: float) -> tuple[float, float]:
    """Distortion radii (r_inner, r_outer) for the level-delta component.

    r_inner = (1+d)(1+2d)^2 / (2+3d)^2 / |x_k'(E_k)|,
    r_outer = (1+d)(1+2d)^2 / d^2 / |x_k'(E_k)|;
    their ratio is (d / (2+3d))^2 independent of the derivative.
    """
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if derivative == 0:
        raise ValueError("zero derivative: the zero is not simple")
    scale = (1.0 + delta) * (1.0 + 2.0 * delta) ** 2 / abs(derivative)
    return scale / (2.0 + 3.0 * delta) ** 2, scale / delta ** 2


def distortion_ball_radii(k: int, delta: float, d_lambda: float,
                          eps: float = 0.05) -> tuple[float, float]:
    """Ball radii with the derivative replaced by its growth-law envelope.

    r_inner = (1+d)(1+2d)^2/(2+3d)^2 * exp(-k (d_lambda + eps)),
    r_outer = ((1+d)(1+2d)/d)^2    * exp(-k (d_lambda - eps)).
    """
    if delta <= 0:
        raise ValueError("delta must be > 0")
    r_in = ((1.0 + delta) * (1.0 + 2.0 * delta) ** 2 / (2.0 + 3.0 * delta) ** 2
            * math.exp(-k * (d_lambda + eps)))
    r_out = (((1.0 + delta) * (1.0 + 2.0 * delta) / delta) ** 2
             * math.exp(-k * (d_lambda - eps)))
    return r_in, r_out


def _modulus_grid(lam, k, center, half_w, half_h, n):
    """|x_k| sampled on an (n+1)^2 grid symmetric in the imaginary direction."""
    re = np.linspace(center.real - half_w, center.real + half_w, n + 1)
    im = np.linspace(-half_h, half_h, n + 1)          # symmetric about the real axis
    zz = re[None, :] + 1j * im[:, None]
    return re, im, np.abs(xk_value(lam, zz, k))


def _point_in_polygon(poly_re, poly_im, x, y):
    """Even-odd rule; poly closed (first == last)."""
    inside = False
    for i in range(len(poly_re) - 1):
        x0, y0, x1, y1 = poly_re[i], poly_im[i], poly_re[i + 1], poly_im[i + 1]
        if (y0 > y) != (y1 > y):
            t = (y - y0) / (y1 - y0)
            if x < x0 + t * (x1 - x0):
                inside = not inside
    return inside


def _extract_component(lam, k, level, center, half_w, half_h, n):
    """One marching-squares pass; returns the closed contour around center, or None."""
    re, im, f = _modulus_grid(lam, k, center, half_w, half_h, n)
    if f.min() > level:
        return None
    for c in find_contours(f, level):
        if not (np.allclose(c[0], c[-1])):
            continue                                   # open: touches the box edge
        xs = np.interp(c[:, 1], np.arange(len(re)), re)
        ys = np.interp(c[:, 0], np.arange(len(im)), im)
        if _point_in_polygon(xs, ys, center.real, center.imag):
            return xs + 1j * ys
    return None


def _refine_to_level(lam, k, level, pts, tol, max_iter=40):
    """Drive polyline vertices onto |x_k| = level along the modulus gradient.

    With w = x_k(z) the gradient of |x_k| is the complex direction
    w * conj(w') / |w|, and a Newton step for |x_k| - level along it is
    dz = -(|w| - level) * w * conj(w') / (|w| |w'|^2).
    """
    z = np.array(pts, dtype=complex)
    for _ in range(max_iter):
        w, dw = xk_and_derivative(lam, z, k)
        g = np.abs(w)
        err = g - level
        if np.max(np.abs(err)) <= tol:
            break
        denom = g * np.abs(dw) ** 2
        denom = np.where(denom == 0.0, 1.0, denom)
        z = z - err * w * np.conj(dw) / denom
    return z


def _winding_number(poly, center):
    rel = poly - center
    angles = np.angle(rel[1:] / rel[:-1])
    return float(np.sum(angles) / (2.0 * math.pi))


def trace_component(lam: float, k: int, delta: float, center: float,
                    contour_tol: float = 1e-10, grid: int = 256,
                    max_retries: int = 5) -> ComponentContour:
    """Trace the boundary of the component of |x_k| <= 1 + delta around a zero.

    Starts from a box whose half-width follows the growth-law scale
    4 exp(-k (d(lambda) - 0.2)), enlarging up to ``max_retries`` times if
    the component leaks through the boundary, then re-traces once on a box
    snapped to the component for full grid resolution.  Vertices are
    refined to |x_k| = 1 + delta within ``contour_tol``; the polyline must
    wind exactly once around the centre.
    """
    if delta <= 0:
        raise ValueError("delta must be > 0")
    c = complex(center)
    level = 1.0 + delta
    half = 4.0 * math.exp(-k * (growth_rate(lam) - 0.2))
    poly = None
    for _ in range(max_retries + 1):
        poly = _extract_component(lam, k, level, c, half, half, grid)
        if poly is not None:
            break
        half *= 2.0
    if poly is None:
        raise ContourError(
            f"component at k={k}, lam={lam}, delta={delta} not closed within "
            f"search box after {max_retries} enlargements")
    # zoom pass: snap the box to the component, keep imaginary symmetry
    half_w = 1.3 * float(np.max(np.abs(poly.real - c.real)))
    half_h = 1.3 * float(np.max(np.abs(poly.imag)))
    refined = _extract_component(lam, k, level, c, half_w, half_h, grid)
    if refined is not None:
        poly = refined
    poly = _refine_to_level(lam, k, level, poly, contour_tol)
    poly[-1] = poly[0]
    wind = _winding_number(poly, c)
    if abs(abs(wind) - 1.0) > 1e-6:
        raise ContourError(
            f"winding number {wind:.6f} != 1 at k={k}, lam={lam}, delta={delta}")
    radii = np.abs(poly[:-1] - c)
    return ComponentContour(k=k, delta=delta, center=c, polyline=poly,
                            inscribed_radius=float(radii.min()),
                            circumscribed_radius=float(radii.max()),
                            lam=lam)


def contour_to_csv(contour: ComponentContour) -> str:
    """CSV rows (re_z, im_z) of the boundary polyline."""
    rows = [(float(z.real), float(z.imag)) for z in contour.polyline]
    return csv_text(("re_z", "im_z"), rows)


def contour_to_svg(contour: ComponentContour, path: str,
                   r_inner: float | None = None,
                   r_outer: float | None = None) -> None:
    """SVG overlay of the traced boundary with the two bounding circles."""
    circles = []
    if r_inner is not None:
        circles.append((contour.center.real, contour.center.imag, r_inner, "#2a7"))
    if r_outer is not None:
        circles.append((contour.center.real, contour.center.imag, r_outer, "#c33"))
    svg_polyline_plot(
        path,
        curves=[(contour.polyline.real, contour.polyline.imag, "#115")],
        circles=circles,
        title=f"component k={contour.k} lam={contour.lam} delta={contour.delta}",
    )
