"""Grid-line visual prompting: lattice over the scene footprint, drawn onto the BEV.

The overlay superimposes evenly spaced grid lines with integer tick marks and
the four direction words, so a vision-language model can name camera positions
as lattice coordinates and orientations as words. The same lattice mapping
feeds the pose builder, keeping both sides of the protocol consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _font
from .errors import InvalidDensity, OutOfGrid, StyleOverflow
from .renderer import BevImage
from .scene_io import SceneBounds

MAX_DENSITY = 32

# Direction words printed on the BEV border; the pose builder maps the same
# words to world directions, so this table is the single source of truth.
DIRECTION_VECTORS = {
    "front": np.array([0.0, 1.0, 0.0]),   # image top
    "back": np.array([0.0, -1.0, 0.0]),   # image bottom
    "left": np.array([-1.0, 0.0, 0.0]),
    "right": np.array([1.0, 0.0, 0.0]),
}
ORIENTATIONS = tuple(DIRECTION_VECTORS)


@dataclass
class GridSpec:
    """Affine lattice of (density+1)^2 points over the scene's xy rectangle.

    Grid point (0, 0) is the min corner, (d, d) the max corner.
    """

    density: int
    bounds_xy: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax

    @property
    def n_points(self) -> int:
        return (self.density + 1) ** 2

    def to_json(self) -> dict:
        return {"density": self.density, "bounds_xy": list(self.bounds_xy)}

    @classmethod
    def from_json(cls, data: dict) -> "GridSpec":
        return cls(int(data["density"]), tuple(data["bounds_xy"]))


@dataclass
class OverlayStyle:
    """Colors and sizes for the grid overlay; defaults chosen to stand out
    against typical indoor scene hues."""

    line_color: tuple[int, int, int] = (0, 200, 0)
    line_thickness: int = 1
    font_px: int = 10
    direction_words: dict = field(default_factory=lambda: {
        "front": "FRONT", "back": "BACK", "left": "LEFT", "right": "RIGHT",
    })

    def __post_init__(self):
        if self.line_thickness < 1:
            raise ValueError("line thickness must be >= 1")


def make_grid(bounds: SceneBounds, density: int) -> GridSpec:
    """Build the lattice over the scene xy bounds; density = cells per axis."""
    if not isinstance(density, (int, np.integer)) or not (1 <= density <= MAX_DENSITY):
        raise InvalidDensity(f"density must be an integer in 1..{MAX_DENSITY}, got {density}")
    xmin, ymin = float(bounds.min[0]), float(bounds.min[1])
    xmax, ymax = float(bounds.max[0]), float(bounds.max[1])
    if xmax <= xmin or ymax <= ymin:
        raise InvalidDensity("bounds have no xy extent to grid")
    return GridSpec(int(density), (xmin, ymin, xmax, ymax))


def grid_to_world(spec: GridSpec, point: tuple[int, int]) -> tuple[float, float]:
    """World (x, y) of lattice point (i, j)."""
    i, j = point
    d = spec.density
    if not (0 <= i <= d and 0 <= j <= d):
        raise OutOfGrid(f"grid point {point} outside [0, {d}]^2")
    xmin, ymin, xmax, ymax = spec.bounds_xy
    return (xmin + i * (xmax - xmin) / d, ymin + j * (ymax - ymin) / d)


def world_to_grid(spec: GridSpec, xy: tuple[float, float]) -> tuple[int, int]:
    """Nearest lattice point, clamped into the grid; ties round toward the
    lower index."""
    x, y = xy
    d = spec.density
    xmin, ymin, xmax, ymax = spec.bounds_xy
    ti = (x - xmin) / (xmax - xmin) * d
    tj = (y - ymin) / (ymax - ymin) * d
    i = int(np.ceil(ti - 0.5))
    j = int(np.ceil(tj - 0.5))
    return (min(max(i, 0), d), min(max(j, 0), d))


def clamp_grid_point(spec: GridSpec, point: tuple[int, int]) -> tuple[int, int]:
    i, j = point
    d = spec.density
    return (min(max(int(i), 0), d), min(max(int(j), 0), d))


def annotate_bev(bev: BevImage, spec: GridSpec, style: OverlayStyle | None = None) -> np.ndarray:
    """Draw grid lines, tick labels 0..d, and direction words onto a copy of the BEV.

    Raises:
        StyleOverflow: labels cannot fit between lattice lines or inside the
            image at the requested font size.
    """
    style = style or OverlayStyle()
    d = spec.density
    xmin, ymin, xmax, ymax = spec.bounds_xy
    height, width = bev.height, bev.width
    out = bev.color.copy()

    u_min, v_max = bev.world_to_pixel(xmin, ymin)  # bottom-left lattice corner
    u_max, v_min = bev.world_to_pixel(xmax, ymax)
    if u_min < -0.5 or v_min < -0.5 or u_max > width - 0.5 or v_max > height - 0.5:
        raise ValueError("grid bounds extend beyond the BEV image")

    scale = _font.scale_for_font_px(style.font_px)
    label_w, label_h = _font.text_size(str(d), scale)
    cell_px = (u_max - u_min) / d
    if label_w >= cell_px:
        raise StyleOverflow(
            f"tick labels {label_w}px wide do not fit {cell_px:.0f}px grid cells")
    if v_max + 2 + label_h > height or u_min - 2 - label_w < 0:
        raise StyleOverflow("tick labels would extend past the image border")

    cols = [int(round(u_min + k * (u_max - u_min) / d)) for k in range(d + 1)]
    rows = [int(round(v_min + k * (v_max - v_min) / d)) for k in range(d + 1)]
    t = style.line_thickness
    lo = -(t // 2)
    for u in cols:
        a, b = max(0, u + lo), min(width, u + lo + t)
        out[int(round(v_min)):int(round(v_max)) + 1, a:b] = style.line_color
    for v in rows:
        a, b = max(0, v + lo), min(height, v + lo + t)
        out[a:b, int(round(u_min)):int(round(u_max)) + 1] = style.line_color

    # ticks: i along the bottom edge, j up the left edge
    for k, u in enumerate(cols):
        w, _ = _font.text_size(str(k), scale)
        _font.draw_text(out, str(k), u - w // 2, int(round(v_max)) + 2,
                        style.line_color, scale)
    for k, v in enumerate(rows):
        j = d - k  # row index 0 is the max-y lattice line
        w, h = _font.text_size(str(j), scale)
        _font.draw_text(out, str(j), int(round(u_min)) - w - 2, v - h // 2,
                        style.line_color, scale)

    words = style.direction_words
    for word, (wx, wy) in (
        (words["front"], (0.5, 0.0)),
        (words["back"], (0.5, 1.0)),
        (words["left"], (0.0, 0.5)),
        (words["right"], (1.0, 0.5)),
    ):
        w, h = _font.text_size(word, scale)
        x = int(round(wx * (width - w)))
        y = int(round(wy * (height - h)))
        x = min(max(x, 0), max(width - w, 0))
        y = min(max(y, 0), max(height - h, 0))
        _font.draw_text(out, word, x, y, style.line_color, scale,
                        halo=(255, 255, 255))
    return out
