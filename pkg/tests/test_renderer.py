import numpy as np
import pytest

import oracles
from scenescout import _kernels
from scenescout.camera import CameraIntrinsics, CameraPose
from scenescout.errors import EmptyScene
from scenescout.image_io import read_pfm, read_png, write_pfm, write_png
from scenescout.pose_grammar import CameraRigConfig, ViewProposal, pose_from_proposal
from scenescout.renderer import render_bev, render_perspective
from scenescout.scene_io import TriangleMesh, compute_bounds, sample_surface_points
from scenescout.solp import make_grid


def tri_mesh(verts, colors, faces=None):
    faces = faces if faces is not None else [[0, 1, 2]]
    return TriangleMesh(np.asarray(verts, dtype=float),
                        np.asarray(colors, dtype=np.uint8),
                        np.asarray(faces))


def small_view(mesh, size=64, pose=None, **kw):
    intr = CameraIntrinsics.default(size)
    pose = pose or CameraPose.identity()
    return render_perspective(mesh, intr, pose, **kw)


@pytest.fixture(scope="module")
def room_view(toy_room3):
    """One well-placed 64x64 view into the toy room."""
    _, mesh, _ = toy_room3
    grid = make_grid(compute_bounds(mesh), 8)
    rig = CameraRigConfig(intrinsics=CameraIntrinsics.default(64))
    pose = pose_from_proposal(ViewProposal((4, 0), "front"), grid, rig, 0.0)
    return mesh, rig.intrinsics, pose, render_perspective(mesh, rig.intrinsics, pose)


class TestRenderPerspective:
    def test_center_triangle_color_and_depth(self):
        mesh = tri_mesh(
            [[-1, -1, 1], [1, -1, 1], [0, 1, 1]],
            [[255, 0, 0]] * 3,
        )
        view = small_view(mesh)
        h, w = view.depth.shape
        cy, cx = h // 2, w // 2
        assert tuple(view.color[cy, cx]) == (255, 0, 0)
        # analytic: ray through that pixel hits the z=1 plane at depth 1
        ray = oracles.raycast_single(
            mesh, np.zeros(3),
            np.array([(cx + 0.5 - 32) / 32, (cy + 0.5 - 32) / 32, 1.0]))
        assert np.isfinite(ray)
        assert abs(view.depth[cy, cx] - ray) < 1e-3

    def test_facing_away_all_background(self):
        mesh = tri_mesh([[-1, -1, 1], [1, -1, 1], [0, 1, 1]], [[255, 0, 0]] * 3)
        # camera rotated 180 degrees about y: looks along -z
        flip = np.diag([-1.0, 1.0, -1.0])
        view = small_view(mesh, pose=CameraPose(flip, np.zeros(3)),
                          clear_color=(7, 8, 9))
        assert np.all(~np.isfinite(view.depth))
        assert np.all(view.color.reshape(-1, 3) == (7, 8, 9))

    def test_zbuffer_keeps_nearer_triangle(self):
        mesh = TriangleMesh(
            np.array([[-1, -1, 1], [1, -1, 1], [0, 1, 1],
                      [-1, -1, 2], [1, -1, 2], [0, 1, 2]], dtype=float),
            np.array([[255, 0, 0]] * 3 + [[0, 0, 255]] * 3, dtype=np.uint8),
            np.array([[0, 1, 2], [3, 4, 5]]),
        )
        view = small_view(mesh)
        cy = cx = 32
        assert tuple(view.color[cy, cx]) == (255, 0, 0)
        assert abs(view.depth[cy, cx] - 1.0) < 1e-6

    def test_deterministic_bytes(self, room_view):
        mesh, intr, pose, view = room_view
        again = render_perspective(mesh, intr, pose)
        assert view.color.tobytes() == again.color.tobytes()
        assert view.depth.tobytes() == again.depth.tobytes()

    def test_finite_depth_within_near_far(self, room_view):
        _, _, _, view = room_view
        finite = view.depth[np.isfinite(view.depth)]
        assert finite.size > 0
        assert np.all(finite > view.near)
        assert np.all(finite < view.far)

    def test_numpy_path_matches_numba(self, room_view, monkeypatch):
        mesh, intr, pose, view = room_view
        monkeypatch.setattr("scenescout.renderer.raster_perspective",
                            _kernels._raster_perspective_numpy)
        other = render_perspective(mesh, intr, pose)
        assert other.color.tobytes() == view.color.tobytes()
        np.testing.assert_array_equal(other.depth, view.depth)

    def test_depth_buffer_against_surface_points(self, toy_room3):
        _, mesh, _ = toy_room3
        grid = make_grid(compute_bounds(mesh), 8)
        rig = CameraRigConfig(intrinsics=CameraIntrinsics.default(256))
        pose = pose_from_proposal(ViewProposal((4, 1), "front"), grid, rig, 0.0)
        view = render_perspective(mesh, rig.intrinsics, pose)
        points = sample_surface_points(mesh, 4000, seed=11)

        checked = 0
        for p in points:
            p_cam = pose.world_to_camera(p)
            if p_cam[2] <= view.near:
                continue
            u = rig.intrinsics.fx * p_cam[0] / p_cam[2] + rig.intrinsics.cx
            v = rig.intrinsics.fy * p_cam[1] / p_cam[2] + rig.intrinsics.cy
            if not (0 <= u < 256 and 0 <= v < 256):
                continue
            # unoccluded along its own ray?
            t_near = oracles.raycast_single(mesh, pose.position, p - pose.position,
                                            near=1e-6)
            if not np.isfinite(t_near) or t_near < 1 - 1e-6:
                continue
            # skip silhouette pixels: center ray must hit the same surface
            direction = np.array([(np.floor(u) + 0.5 - rig.intrinsics.cx) / rig.intrinsics.fx,
                                  (np.floor(v) + 0.5 - rig.intrinsics.cy) / rig.intrinsics.fy,
                                  1.0]) @ pose.rotation.T
            t_center = oracles.raycast_single(mesh, pose.position, direction,
                                              near=view.near)
            if not np.isfinite(t_center) or abs(t_center - p_cam[2]) > 1e-3:
                continue
            rendered = view.depth[int(np.floor(v)), int(np.floor(u))]
            assert np.isfinite(rendered)
            assert abs(rendered - p_cam[2]) < 2e-3
            checked += 1
            if checked >= 50:
                break
        assert checked >= 50

    def test_occlusion_matches_raycast(self, room_view):
        mesh, intr, pose, view = room_view
        oracle = oracles.raycast_depths(mesh, intr, pose, view.near, view.far)
        both = np.isfinite(oracle) & np.isfinite(view.depth)
        assert both.mean() > 0.3
        agree = np.abs(oracle[both] - view.depth[both]) < 2e-3
        assert agree.mean() >= 0.995

    def test_empty_mesh(self):
        mesh = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3)),
                            np.zeros((0, 3), dtype=np.int64))
        with pytest.raises(EmptyScene):
            small_view(mesh)

    def test_camera_inside_geometry_near_clip(self, toy_room3):
        # camera inside the room: triangles straddle the near plane
        _, mesh, _ = toy_room3
        pose = CameraPose(np.eye(3), np.array([3.0, 2.0, 1.0]))
        view = small_view(mesh, pose=pose)
        finite = view.depth[np.isfinite(view.depth)]
        assert finite.size > 0
        assert np.all(finite > view.near)


class TestRenderBev:
    def test_unit_floor_fully_red(self):
        mesh = TriangleMesh(
            np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float),
            np.array([[255, 0, 0]] * 4, dtype=np.uint8),
            np.array([[0, 1, 2], [0, 2, 3]]),
        )
        bev = render_bev(mesh, compute_bounds(mesh), px_per_meter=100, margin_m=0.0)
        assert bev.color.shape == (100, 100, 3)
        assert np.all(bev.color.reshape(-1, 3) == (255, 0, 0))

    def test_box_top_wins_over_floor(self, toy_room3):
        _, mesh, _ = toy_room3
        from scenescout.scene_io import strip_ceiling
        bev = render_bev(strip_ceiling(mesh, 2.2), compute_bounds(mesh))
        # table box center: world (3.0, 2.0), brown (139, 69, 19)
        u, v = bev.world_to_pixel(3.0, 2.0)
        assert tuple(bev.color[int(round(v)), int(round(u))]) == (139, 69, 19)
        # bare floor point away from furniture
        u, v = bev.world_to_pixel(0.8, 3.2)
        assert tuple(bev.color[int(round(v)), int(round(u))]) == (180, 180, 180)

    def test_mapping_round_trip_half_pixel(self, toy_room3):
        _, mesh, _ = toy_room3
        bev = render_bev(mesh, compute_bounds(mesh), px_per_meter=87.0, margin_m=0.31)
        rng = np.random.default_rng(5)
        for _ in range(200):
            x = rng.uniform(0, 6)
            y = rng.uniform(0, 4)
            u, v = bev.world_to_pixel(x, y)
            bx, by = bev.pixel_to_world(round(u), round(v))
            assert abs(bx - x) <= 0.5 / bev.px_per_meter + 1e-9
            assert abs(by - y) <= 0.5 / bev.px_per_meter + 1e-9

    def test_orientation_of_axes(self):
        # two quads: red at low y, blue at high y; +y must render at image top
        mesh = TriangleMesh(
            np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                      [0, 1, 0], [1, 1, 0], [1, 2, 0], [0, 2, 0]], dtype=float),
            np.array([[255, 0, 0]] * 4 + [[0, 0, 255]] * 4, dtype=np.uint8),
            np.array([[0, 1, 2], [0, 2, 3], [4, 5, 6], [4, 6, 7]]),
        )
        bev = render_bev(mesh, compute_bounds(mesh), px_per_meter=10, margin_m=0.0)
        assert tuple(bev.color[2, 5]) == (0, 0, 255)    # top rows = high y
        assert tuple(bev.color[17, 5]) == (255, 0, 0)   # bottom rows = low y

    def test_numpy_path_matches_numba(self, toy_room3, monkeypatch):
        _, mesh, _ = toy_room3
        bounds = compute_bounds(mesh)
        ref = render_bev(mesh, bounds)
        monkeypatch.setattr("scenescout.renderer.raster_ortho",
                            _kernels._raster_ortho_numpy)
        other = render_bev(mesh, bounds)
        assert other.color.tobytes() == ref.color.tobytes()


class TestImageIO:
    def test_png_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, size=(33, 47, 3), dtype=np.uint8)
        write_png(img, tmp_path / "x.png")
        np.testing.assert_array_equal(read_png(tmp_path / "x.png"), img)

    def test_pfm_round_trip_with_inf(self, tmp_path):
        depth = np.array([[1.5, np.inf], [0.25, 3.75]], dtype=np.float32)
        write_pfm(depth, tmp_path / "d.pfm")
        back = read_pfm(tmp_path / "d.pfm")
        assert back[0, 1] == np.inf
        np.testing.assert_array_equal(back[np.isfinite(back)],
                                      depth[np.isfinite(depth)])

    def test_pfm_deterministic(self, tmp_path, room_view):
        _, _, _, view = room_view
        write_pfm(view.depth, tmp_path / "a.pfm")
        write_pfm(view.depth, tmp_path / "b.pfm")
        assert (tmp_path / "a.pfm").read_bytes() == (tmp_path / "b.pfm").read_bytes()
        back = read_pfm(tmp_path / "a.pfm")
        finite = np.isfinite(view.depth)
        np.testing.assert_array_equal(np.isfinite(back), finite)
        np.testing.assert_array_equal(back[finite], view.depth[finite])
