import numpy as np
import pytest

from scenescout.errors import InvalidDensity, OutOfGrid, StyleOverflow
from scenescout.renderer import BevImage, render_bev
from scenescout.scene_io import SceneBounds, TriangleMesh, compute_bounds
from scenescout.solp import (
    GridSpec,
    OverlayStyle,
    annotate_bev,
    grid_to_world,
    make_grid,
    world_to_grid,
)


def bounds_xy(x0, y0, x1, y1):
    return SceneBounds([x0, y0, 0.0], [x1, y1, 2.0])


def gray_bev(world_extent=8.0, ppm=50.0, margin=0.5):
    """Uniform gray BEV with a consistent world mapping."""
    mesh = TriangleMesh(
        np.array([[0, 0, 0], [world_extent, 0, 0],
                  [world_extent, world_extent, 0], [0, world_extent, 0]], dtype=float),
        np.full((4, 3), 128, dtype=np.uint8),
        np.array([[0, 1, 2], [0, 2, 3]]),
    )
    bev = render_bev(mesh, compute_bounds(mesh), px_per_meter=ppm, margin_m=margin)
    bev.color[:] = 128
    return bev, compute_bounds(mesh)


class TestLattice:
    def test_midpoint(self):
        spec = make_grid(bounds_xy(0, 0, 8, 8), 8)
        assert grid_to_world(spec, (4, 4)) == (4.0, 4.0)

    def test_counts_for_density_8(self):
        spec = make_grid(bounds_xy(0, 0, 8, 8), 8)
        assert spec.density + 1 == 9      # 9 lines per axis
        assert spec.n_points == 81

    def test_density_zero_invalid(self):
        with pytest.raises(InvalidDensity):
            make_grid(bounds_xy(0, 0, 8, 8), 0)

    def test_density_too_large_invalid(self):
        with pytest.raises(InvalidDensity):
            make_grid(bounds_xy(0, 0, 8, 8), 33)

    def test_corners(self):
        spec = make_grid(bounds_xy(1, 2, 7, 6), 5)
        assert grid_to_world(spec, (0, 0)) == (1.0, 2.0)
        assert grid_to_world(spec, (5, 5)) == (7.0, 6.0)

    def test_affine_example(self):
        spec = make_grid(bounds_xy(0, 0, 6, 4), 8)
        np.testing.assert_allclose(grid_to_world(spec, (2, 6)), (1.5, 3.0))

    def test_out_of_grid(self):
        spec = make_grid(bounds_xy(0, 0, 8, 8), 8)
        with pytest.raises(OutOfGrid):
            grid_to_world(spec, (9, 0))
        with pytest.raises(OutOfGrid):
            grid_to_world(spec, (0, -1))

    @pytest.mark.parametrize("density", [4, 8, 16])
    def test_round_trip_exhaustive(self, density):
        spec = make_grid(bounds_xy(0.3, -1.7, 6.3, 2.9), density)
        for i in range(density + 1):
            for j in range(density + 1):
                assert world_to_grid(spec, grid_to_world(spec, (i, j))) == (i, j)

    def test_far_point_clamps_to_corner(self):
        spec = make_grid(bounds_xy(0, 0, 8, 8), 8)
        assert world_to_grid(spec, (1e6, 1e6)) == (8, 8)
        assert world_to_grid(spec, (-1e6, -1e6)) == (0, 0)

    def test_cell_center_ties_round_down(self):
        spec = make_grid(bounds_xy(0, 0, 8, 8), 8)
        assert world_to_grid(spec, (3.5, 5.5)) == (3, 5)


class TestAnnotate:
    def test_line_count_density_4(self):
        bev, bounds = gray_bev()
        spec = make_grid(bounds, 4)
        out = annotate_bev(bev, spec, OverlayStyle())
        color = np.array(OverlayStyle().line_color, dtype=np.uint8)

        u0, v1 = bev.world_to_pixel(*spec.bounds_xy[:2])
        u1, v0 = bev.world_to_pixel(*spec.bounds_xy[2:])
        u0, u1, v0, v1 = (int(round(x)) for x in (u0, u1, v0, v1))
        # a direction word may overlap a border line, so require >= 90% colored
        col_line = np.mean(np.all(out[v0:v1 + 1, :] == color, axis=2), axis=0) >= 0.9
        row_line = np.mean(np.all(out[:, u0:u1 + 1] == color, axis=2), axis=1) >= 0.9

        def runs(mask):
            return int(np.sum(mask & ~np.roll(mask, 1)) if mask.any() else 0)

        assert runs(col_line) == 5
        assert runs(row_line) == 5
        assert runs(col_line) + runs(row_line) == 10
        # every lattice position is style-colored (probe 3/8 along the span,
        # away from the centered direction words)
        probe_v = v0 + 3 * (v1 - v0) // 8
        probe_u = u0 + 3 * (u1 - u0) // 8
        for k in range(5):
            u = int(round(u0 + k * (u1 - u0) / 4))
            v = int(round(v0 + k * (v1 - v0) / 4))
            assert tuple(out[probe_v, u]) == tuple(color)
            assert tuple(out[v, probe_u]) == tuple(color)

    def test_deterministic(self):
        bev, bounds = gray_bev()
        spec = make_grid(bounds, 8)
        a = annotate_bev(bev, spec)
        b = annotate_bev(bev, spec)
        assert a.tobytes() == b.tobytes()

    def test_style_overflow_dense_grid_small_image(self):
        bev, bounds = gray_bev(world_extent=8.0, ppm=16.0, margin=0.0)
        assert bev.width == 128
        spec = make_grid(bounds, 16)
        with pytest.raises(StyleOverflow):
            annotate_bev(bev, spec, OverlayStyle(font_px=12))

    def test_untouched_far_from_overlay(self):
        bev, bounds = gray_bev()
        spec = make_grid(bounds, 4)
        style = OverlayStyle()
        out = annotate_bev(bev, spec, style)
        changed = np.any(out != bev.color, axis=2)

        # permitted zones: grid lines (dilated), tick label boxes, border words
        from scenescout import _font
        allowed = np.zeros_like(changed)
        scale = _font.scale_for_font_px(style.font_px)
        pad = style.line_thickness + 1
        u0, v1 = bev.world_to_pixel(*spec.bounds_xy[:2])
        u1, v0 = bev.world_to_pixel(*spec.bounds_xy[2:])
        cols = [int(round(u0 + k * (u1 - u0) / 4)) for k in range(5)]
        rows = [int(round(v0 + k * (v1 - v0) / 4)) for k in range(5)]
        for u in cols:
            allowed[:, max(0, u - pad):u + pad + 1] = True
        for v in rows:
            allowed[max(0, v - pad):v + pad + 1, :] = True
        label_h = _font.GLYPH_H * scale + 2 * scale
        label_w = (2 * _font.GLYPH_ADVANCE) * scale
        for u in cols:  # bottom tick labels
            allowed[int(round(v1)):int(round(v1)) + label_h + 4,
                    max(0, u - label_w):u + label_w] = True
        for v in rows:  # left tick labels
            allowed[max(0, v - label_h):v + label_h,
                    0:int(round(u0)) + 2] = True
        word_h = label_h + 4
        allowed[0:word_h, :] = True             # FRONT strip
        allowed[-word_h:, :] = True             # BACK strip
        allowed[:, 0:6 * _font.GLYPH_ADVANCE * scale] = True   # LEFT strip
        allowed[:, -6 * _font.GLYPH_ADVANCE * scale:] = True   # RIGHT strip
        assert not np.any(changed & ~allowed)

    def test_grid_must_fit_bev(self):
        bev, _ = gray_bev(world_extent=4.0)
        wide = make_grid(bounds_xy(-10, -10, 20, 20), 4)
        with pytest.raises(ValueError):
            annotate_bev(bev, wide)

    def test_annotation_survives_on_scene_bev(self, toy_room3):
        _, mesh, _ = toy_room3
        from scenescout.scene_io import strip_ceiling
        bounds = compute_bounds(mesh)
        bev = render_bev(strip_ceiling(mesh, 2.2), bounds)
        out = annotate_bev(bev, make_grid(bounds, 8))
        assert out.shape == bev.color.shape
        assert np.any(np.all(out == (0, 200, 0), axis=2))
