"""Deterministic software renderer: perspective views with depth, and top-down BEV images."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import raster_ortho, raster_perspective
from .camera import CameraIntrinsics, CameraPose
from .errors import EmptyScene
from .scene_io import SceneBounds, TriangleMesh

DEFAULT_CLEAR_COLOR = (255, 255, 255)


@dataclass
class ViewBundle:
    """One rendered viewpoint: color, metric depth (+inf background), and its camera."""

    color: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) float32, +inf where no geometry
    pose: CameraPose
    intrinsics: CameraIntrinsics
    near: float = 0.05
    far: float = 100.0

    def __post_init__(self):
        h, w = self.depth.shape
        if self.color.shape != (h, w, 3):
            raise ValueError("color and depth dimensions differ")
        if (w, h) != (self.intrinsics.width, self.intrinsics.height):
            raise ValueError("image size does not match intrinsics")


@dataclass
class BevImage:
    """Orthographic top-down render with its pixel-to-world mapping.

    origin_world_xy is the world (x, y) at the center of the bottom-left
    pixel (0, height-1); image +x is world +x and image up is world +y.
    """

    color: np.ndarray  # (H, W, 3) uint8
    px_per_meter: float
    origin_world_xy: tuple[float, float]
    margin_m: float = 0.0

    @property
    def width(self) -> int:
        return self.color.shape[1]

    @property
    def height(self) -> int:
        return self.color.shape[0]

    def world_to_pixel(self, x: float, y: float) -> tuple[float, float]:
        """Continuous pixel coords; integer values land on pixel centers."""
        ox, oy = self.origin_world_xy
        u = (x - ox) * self.px_per_meter
        v = (self.height - 1) - (y - oy) * self.px_per_meter
        return u, v

    def pixel_to_world(self, u: float, v: float) -> tuple[float, float]:
        ox, oy = self.origin_world_xy
        x = ox + u / self.px_per_meter
        y = oy + ((self.height - 1) - v) / self.px_per_meter
        return x, y


def _clip_triangles_near(tri_cam: np.ndarray, tri_rgb: np.ndarray, near: float):
    """Clip camera-space triangles against the z = near plane.

    Returns (cam_tris (K,3,3), rgb_tris (K,3,3)); crossing triangles are split
    with attributes interpolated at the plane, fully-behind ones dropped.
    """
    z = tri_cam[:, :, 2]
    vin = z >= near
    n_in = vin.sum(axis=1)
    full = n_in == 3
    cross = (n_in == 1) | (n_in == 2)

    out_cam = [tri_cam[full]]
    out_rgb = [tri_rgb[full]]
    for idx in np.nonzero(cross)[0]:
        verts = tri_cam[idx]
        rgbs = tri_rgb[idx]
        poly_v, poly_c = [], []
        for i in range(3):
            j = (i + 1) % 3
            a, ca = verts[i], rgbs[i]
            b, cb = verts[j], rgbs[j]
            a_in = a[2] >= near
            b_in = b[2] >= near
            if a_in:
                poly_v.append(a)
                poly_c.append(ca)
            if a_in != b_in:
                t = (near - a[2]) / (b[2] - a[2])
                poly_v.append(a + t * (b - a))
                poly_c.append(ca + t * (cb - ca))
        for i in range(1, len(poly_v) - 1):  # fan triangulation (3 or 4 vertices)
            out_cam.append(np.stack([poly_v[0], poly_v[i], poly_v[i + 1]])[None])
            out_rgb.append(np.stack([poly_c[0], poly_c[i], poly_c[i + 1]])[None])
    return np.concatenate(out_cam, axis=0), np.concatenate(out_rgb, axis=0)


def render_perspective(
    mesh: TriangleMesh,
    intrinsics: CameraIntrinsics,
    pose: CameraPose,
    near: float = 0.05,
    far: float = 100.0,
    clear_color: tuple[int, int, int] = DEFAULT_CLEAR_COLOR,
) -> ViewBundle:
    """Render a z-buffered perspective view with perspective-correct colors.

    Background pixels take clear_color and depth +inf. No multisampling, no
    backface culling; output is a pure function of the inputs.
    """
    if mesh.n_faces == 0:
        raise EmptyScene("cannot render an empty mesh")
    if not (0 < near < far):
        raise ValueError("need 0 < near < far")
    width, height = intrinsics.width, intrinsics.height

    verts_cam = pose.world_to_camera(mesh.vertices)
    tri_cam = verts_cam[mesh.faces]
    tri_rgb = mesh.vertex_colors[mesh.faces].astype(np.float64)
    tri_cam, tri_rgb = _clip_triangles_near(tri_cam, tri_rgb, near)

    depth = np.full((height, width), np.inf, dtype=np.float64)
    color = np.empty((height, width, 3), dtype=np.float64)
    color[:] = np.asarray(clear_color, dtype=np.float64)

    if len(tri_cam):
        w = 1.0 / tri_cam[:, :, 2]
        tri_xy = np.stack(
            [intrinsics.fx * tri_cam[:, :, 0] * w + intrinsics.cx,
             intrinsics.fy * tri_cam[:, :, 1] * w + intrinsics.cy],
            axis=2,
        )
        tri_attr = tri_rgb * w[:, :, None]
        raster_perspective(
            np.ascontiguousarray(tri_xy),
            np.ascontiguousarray(w),
            np.ascontiguousarray(tri_attr),
            float(near), float(far), depth, color,
        )

    color_u8 = np.clip(np.rint(color), 0, 255).astype(np.uint8)
    return ViewBundle(color_u8, depth.astype(np.float32), pose, intrinsics,
                      near=near, far=far)


def render_bev(
    mesh: TriangleMesh,
    bounds: SceneBounds,
    px_per_meter: float = 100.0,
    margin_m: float = 0.5,
    clear_color: tuple[int, int, int] = DEFAULT_CLEAR_COLOR,
) -> BevImage:
    """Render the orthographic top-down view; the highest surface per column wins.

    The image covers the scene's xy bounds plus margin_m on every side; the
    pixel/world mapping is recorded on the returned BevImage.
    """
    if mesh.n_faces == 0:
        raise EmptyScene("cannot render an empty mesh")
    if px_per_meter <= 0:
        raise ValueError("px_per_meter must be positive")
    if margin_m < 0:
        raise ValueError("margin_m must be >= 0")
    xmin, ymin = bounds.min[0], bounds.min[1]
    xmax, ymax = bounds.max[0], bounds.max[1]
    if xmax <= xmin or ymax <= ymin:
        raise EmptyScene("scene bounds have no xy extent")

    width = max(1, int(math.ceil((xmax - xmin + 2 * margin_m) * px_per_meter)))
    height = max(1, int(math.ceil((ymax - ymin + 2 * margin_m) * px_per_meter)))
    wx0 = xmin - margin_m
    wy_top = ymax + margin_m

    tri_world = mesh.vertices[mesh.faces]
    tri_xy = np.stack(
        [(tri_world[:, :, 0] - wx0) * px_per_meter,
         (wy_top - tri_world[:, :, 1]) * px_per_meter],
        axis=2,
    )
    tri_z = tri_world[:, :, 2]
    tri_rgb = mesh.vertex_colors[mesh.faces].astype(np.float64)

    zbuf = np.full((height, width), -np.inf, dtype=np.float64)
    color = np.empty((height, width, 3), dtype=np.float64)
    color[:] = np.asarray(clear_color, dtype=np.float64)
    raster_ortho(
        np.ascontiguousarray(tri_xy),
        np.ascontiguousarray(tri_z),
        np.ascontiguousarray(tri_rgb),
        zbuf, color,
    )

    color_u8 = np.clip(np.rint(color), 0, 255).astype(np.uint8)
    origin = (wx0 + 0.5 / px_per_meter, wy_top - (height - 0.5) / px_per_meter)
    return BevImage(color_u8, px_per_meter, origin, margin_m=margin_m)
