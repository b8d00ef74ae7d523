"""Rasterization inner loops: numba-jitted kernels with a pure-numpy fallback.

Set SCENESCOUT_NO_NUMBA=1 to force the numpy path (useful on platforms where
numba is unavailable and for cross-checking the two implementations). Both
paths implement the same arithmetic in the same order so outputs agree.

Screen convention: pixel (px, py) samples at center (px + 0.5, py + 0.5);
triangles are reordered so their signed screen area is positive, edge
functions are >= 0 inside, and ties on shared edges resolve by the top-left
fill rule (a lattice point on an edge belongs to the triangle for which that
edge is a top or left edge).
"""

from __future__ import annotations

import math
import os

import numpy as np

NUMBA_DISABLED = os.environ.get("SCENESCOUT_NO_NUMBA", "").lower() in ("1", "true", "yes")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled by SCENESCOUT_NO_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # no-op decorator so the jit source still imports
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _is_top_left(ax: float, ay: float, bx: float, by: float) -> bool:
    dy = by - ay
    return (dy == 0.0 and bx - ax > 0.0) or dy < 0.0


def _raster_perspective_numpy(tri_xy, tri_w, tri_attr, near, far, depth, color):
    """Z-buffered perspective rasterization, vectorized per triangle bbox.

    tri_xy: (K,3,2) screen coords; tri_w: (K,3) 1/z; tri_attr: (K,3,3)
    color premultiplied by 1/z. depth keeps the smallest z per pixel.
    """
    height, width = depth.shape
    for k in range(tri_xy.shape[0]):
        x0, y0 = tri_xy[k, 0]
        x1, y1 = tri_xy[k, 1]
        x2, y2 = tri_xy[k, 2]
        w0, w1, w2 = tri_w[k]
        a0, a1, a2 = tri_attr[k]
        area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area2 == 0.0:
            continue
        if area2 < 0.0:
            x1, y1, x2, y2 = x2, y2, x1, y1
            w1, w2 = w2, w1
            a1, a2 = a2, a1
            area2 = -area2
        xa = max(0, int(math.floor(min(x0, x1, x2) - 0.5)))
        xb = min(width - 1, int(math.ceil(max(x0, x1, x2) - 0.5)))
        ya = max(0, int(math.floor(min(y0, y1, y2) - 0.5)))
        yb = min(height - 1, int(math.ceil(max(y0, y1, y2) - 0.5)))
        if xa > xb or ya > yb:
            continue
        cx = np.arange(xa, xb + 1, dtype=np.float64) + 0.5
        cy = np.arange(ya, yb + 1, dtype=np.float64) + 0.5
        px, py = np.meshgrid(cx, cy)
        e12 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        e20 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
        e01 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
        inside = (
            ((e12 > 0) | ((e12 == 0) & _is_top_left(x1, y1, x2, y2)))
            & ((e20 > 0) | ((e20 == 0) & _is_top_left(x2, y2, x0, y0)))
            & ((e01 > 0) | ((e01 == 0) & _is_top_left(x0, y0, x1, y1)))
        )
        if not inside.any():
            continue
        w = (e12 * w0 + e20 * w1 + e01 * w2) / area2
        with np.errstate(divide="ignore", invalid="ignore"):
            z = 1.0 / w
        dwin = depth[ya:yb + 1, xa:xb + 1]
        win = inside & (z > near) & (z < far) & (z < dwin)
        if not win.any():
            continue
        cwin = color[ya:yb + 1, xa:xb + 1]
        for c in range(3):
            interp = (e12 * a0[c] + e20 * a1[c] + e01 * a2[c]) / area2 / w
            cwin[..., c] = np.where(win, interp, cwin[..., c])
        depth[ya:yb + 1, xa:xb + 1] = np.where(win, z, dwin)


def _raster_ortho_numpy(tri_xy, tri_z, tri_rgb, zbuf, color):
    """Top-down orthographic rasterization; the highest z per pixel wins."""
    height, width = zbuf.shape
    for k in range(tri_xy.shape[0]):
        x0, y0 = tri_xy[k, 0]
        x1, y1 = tri_xy[k, 1]
        x2, y2 = tri_xy[k, 2]
        z0, z1, z2 = tri_z[k]
        a0, a1, a2 = tri_rgb[k]
        area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area2 == 0.0:
            continue
        if area2 < 0.0:
            x1, y1, x2, y2 = x2, y2, x1, y1
            z1, z2 = z2, z1
            a1, a2 = a2, a1
            area2 = -area2
        xa = max(0, int(math.floor(min(x0, x1, x2) - 0.5)))
        xb = min(width - 1, int(math.ceil(max(x0, x1, x2) - 0.5)))
        ya = max(0, int(math.floor(min(y0, y1, y2) - 0.5)))
        yb = min(height - 1, int(math.ceil(max(y0, y1, y2) - 0.5)))
        if xa > xb or ya > yb:
            continue
        cx = np.arange(xa, xb + 1, dtype=np.float64) + 0.5
        cy = np.arange(ya, yb + 1, dtype=np.float64) + 0.5
        px, py = np.meshgrid(cx, cy)
        e12 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        e20 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
        e01 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
        inside = (
            ((e12 > 0) | ((e12 == 0) & _is_top_left(x1, y1, x2, y2)))
            & ((e20 > 0) | ((e20 == 0) & _is_top_left(x2, y2, x0, y0)))
            & ((e01 > 0) | ((e01 == 0) & _is_top_left(x0, y0, x1, y1)))
        )
        if not inside.any():
            continue
        z = (e12 * z0 + e20 * z1 + e01 * z2) / area2
        zwin = zbuf[ya:yb + 1, xa:xb + 1]
        win = inside & (z > zwin)
        if not win.any():
            continue
        cwin = color[ya:yb + 1, xa:xb + 1]
        for c in range(3):
            interp = (e12 * a0[c] + e20 * a1[c] + e01 * a2[c]) / area2
            cwin[..., c] = np.where(win, interp, cwin[..., c])
        zbuf[ya:yb + 1, xa:xb + 1] = np.where(win, z, zwin)


@njit(cache=True)
def _raster_perspective_jit(tri_xy, tri_w, tri_attr, near, far, depth, color):  # pragma: no cover - mirrored by numpy path
    height, width = depth.shape
    for k in range(tri_xy.shape[0]):
        x0 = tri_xy[k, 0, 0]
        y0 = tri_xy[k, 0, 1]
        x1 = tri_xy[k, 1, 0]
        y1 = tri_xy[k, 1, 1]
        x2 = tri_xy[k, 2, 0]
        y2 = tri_xy[k, 2, 1]
        w0 = tri_w[k, 0]
        w1 = tri_w[k, 1]
        w2 = tri_w[k, 2]
        a0r = tri_attr[k, 0, 0]
        a0g = tri_attr[k, 0, 1]
        a0b = tri_attr[k, 0, 2]
        a1r = tri_attr[k, 1, 0]
        a1g = tri_attr[k, 1, 1]
        a1b = tri_attr[k, 1, 2]
        a2r = tri_attr[k, 2, 0]
        a2g = tri_attr[k, 2, 1]
        a2b = tri_attr[k, 2, 2]
        area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area2 == 0.0:
            continue
        if area2 < 0.0:
            x1, y1, x2, y2 = x2, y2, x1, y1
            w1, w2 = w2, w1
            a1r, a2r = a2r, a1r
            a1g, a2g = a2g, a1g
            a1b, a2b = a2b, a1b
            area2 = -area2
        minx = min(x0, min(x1, x2))
        maxx = max(x0, max(x1, x2))
        miny = min(y0, min(y1, y2))
        maxy = max(y0, max(y1, y2))
        xa = max(0, int(math.floor(minx - 0.5)))
        xb = min(width - 1, int(math.ceil(maxx - 0.5)))
        ya = max(0, int(math.floor(miny - 0.5)))
        yb = min(height - 1, int(math.ceil(maxy - 0.5)))
        tl12 = ((y2 - y1) == 0.0 and (x2 - x1) > 0.0) or (y2 - y1) < 0.0
        tl20 = ((y0 - y2) == 0.0 and (x0 - x2) > 0.0) or (y0 - y2) < 0.0
        tl01 = ((y1 - y0) == 0.0 and (x1 - x0) > 0.0) or (y1 - y0) < 0.0
        for py_i in range(ya, yb + 1):
            py = py_i + 0.5
            for px_i in range(xa, xb + 1):
                px = px_i + 0.5
                e12 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
                e20 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
                e01 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
                if not ((e12 > 0 or (e12 == 0 and tl12))
                        and (e20 > 0 or (e20 == 0 and tl20))
                        and (e01 > 0 or (e01 == 0 and tl01))):
                    continue
                w = (e12 * w0 + e20 * w1 + e01 * w2) / area2
                if w <= 0.0:
                    continue
                z = 1.0 / w
                if z <= near or z >= far or z >= depth[py_i, px_i]:
                    continue
                depth[py_i, px_i] = z
                color[py_i, px_i, 0] = (e12 * a0r + e20 * a1r + e01 * a2r) / area2 / w
                color[py_i, px_i, 1] = (e12 * a0g + e20 * a1g + e01 * a2g) / area2 / w
                color[py_i, px_i, 2] = (e12 * a0b + e20 * a1b + e01 * a2b) / area2 / w


@njit(cache=True)
def _raster_ortho_jit(tri_xy, tri_z, tri_rgb, zbuf, color):  # pragma: no cover - mirrored by numpy path
    height, width = zbuf.shape
    for k in range(tri_xy.shape[0]):
        x0 = tri_xy[k, 0, 0]
        y0 = tri_xy[k, 0, 1]
        x1 = tri_xy[k, 1, 0]
        y1 = tri_xy[k, 1, 1]
        x2 = tri_xy[k, 2, 0]
        y2 = tri_xy[k, 2, 1]
        z0 = tri_z[k, 0]
        z1 = tri_z[k, 1]
        z2 = tri_z[k, 2]
        a0r = tri_rgb[k, 0, 0]
        a0g = tri_rgb[k, 0, 1]
        a0b = tri_rgb[k, 0, 2]
        a1r = tri_rgb[k, 1, 0]
        a1g = tri_rgb[k, 1, 1]
        a1b = tri_rgb[k, 1, 2]
        a2r = tri_rgb[k, 2, 0]
        a2g = tri_rgb[k, 2, 1]
        a2b = tri_rgb[k, 2, 2]
        area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area2 == 0.0:
            continue
        if area2 < 0.0:
            x1, y1, x2, y2 = x2, y2, x1, y1
            z1, z2 = z2, z1
            a1r, a2r = a2r, a1r
            a1g, a2g = a2g, a1g
            a1b, a2b = a2b, a1b
            area2 = -area2
        minx = min(x0, min(x1, x2))
        maxx = max(x0, max(x1, x2))
        miny = min(y0, min(y1, y2))
        maxy = max(y0, max(y1, y2))
        xa = max(0, int(math.floor(minx - 0.5)))
        xb = min(width - 1, int(math.ceil(maxx - 0.5)))
        ya = max(0, int(math.floor(miny - 0.5)))
        yb = min(height - 1, int(math.ceil(maxy - 0.5)))
        tl12 = ((y2 - y1) == 0.0 and (x2 - x1) > 0.0) or (y2 - y1) < 0.0
        tl20 = ((y0 - y2) == 0.0 and (x0 - x2) > 0.0) or (y0 - y2) < 0.0
        tl01 = ((y1 - y0) == 0.0 and (x1 - x0) > 0.0) or (y1 - y0) < 0.0
        for py_i in range(ya, yb + 1):
            py = py_i + 0.5
            for px_i in range(xa, xb + 1):
                px = px_i + 0.5
                e12 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
                e20 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
                e01 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
                if not ((e12 > 0 or (e12 == 0 and tl12))
                        and (e20 > 0 or (e20 == 0 and tl20))
                        and (e01 > 0 or (e01 == 0 and tl01))):
                    continue
                z = (e12 * z0 + e20 * z1 + e01 * z2) / area2
                if z <= zbuf[py_i, px_i]:
                    continue
                zbuf[py_i, px_i] = z
                color[py_i, px_i, 0] = (e12 * a0r + e20 * a1r + e01 * a2r) / area2
                color[py_i, px_i, 1] = (e12 * a0g + e20 * a1g + e01 * a2g) / area2
                color[py_i, px_i, 2] = (e12 * a0b + e20 * a1b + e01 * a2b) / area2


def kernel_mode() -> str:
    return "numba" if HAS_NUMBA else "numpy"


if HAS_NUMBA:
    raster_perspective = _raster_perspective_jit
    raster_ortho = _raster_ortho_jit
else:
    raster_perspective = _raster_perspective_numpy
    raster_ortho = _raster_ortho_numpy
