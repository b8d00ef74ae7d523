"""Pinhole camera model: intrinsics, pose, forward projection and back-projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDepth

BEHIND = None  # sentinel returned by project() for points at or behind the camera plane


@dataclass
class CameraIntrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside the image")

    @classmethod
    def default(cls, size: int = 512) -> "CameraIntrinsics":
        # fx = size/2 gives roughly a 90 degree horizontal field of view.
        return cls(fx=size / 2, fy=size / 2, cx=size / 2, cy=size / 2,
                   width=size, height=size)


@dataclass
class CameraPose:
    """Camera orientation and position in world frame.

    rotation columns are the camera axes expressed in world coordinates
    (+x image right, +y image down, +z view direction); position is the
    camera center. det(R) must be +1 and R orthonormal.
    """

    rotation: np.ndarray  # (3, 3)
    position: np.ndarray  # (3,)

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.position = np.asarray(self.position, dtype=np.float64).reshape(3)
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err >= 1e-6:
            raise ValueError(f"rotation not orthonormal (|R^T R - I| = {err:.2e})")
        det = np.linalg.det(self.rotation)
        if abs(det - 1.0) >= 1e-6:
            raise ValueError(f"rotation determinant {det:.6f} != +1")

    @classmethod
    def identity(cls) -> "CameraPose":
        return cls(np.eye(3), np.zeros(3))

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        """Transform world points (..., 3) into the camera frame."""
        pts = np.asarray(points, dtype=np.float64)
        return (pts - self.position) @ self.rotation


def project(
    intrinsics: CameraIntrinsics, pose: CameraPose, world_point
) -> tuple[float, float, float] | None:
    """Project a world point to (u, v, depth); returns None (Behind) if z <= 0.

    Depth is the camera-frame z coordinate in meters, not the ray length.
    """
    p_cam = pose.world_to_camera(np.asarray(world_point, dtype=np.float64).reshape(3))
    z = p_cam[2]
    if z <= 0:
        return BEHIND
    u = intrinsics.fx * p_cam[0] / z + intrinsics.cx
    v = intrinsics.fy * p_cam[1] / z + intrinsics.cy
    return (u, v, z)


def project_many(
    intrinsics: CameraIntrinsics, pose: CameraPose, world_points: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized projection: returns (uv (N,2), depth (N,), in_front (N,) bool)."""
    p_cam = pose.world_to_camera(np.asarray(world_points, dtype=np.float64).reshape(-1, 3))
    z = p_cam[:, 2]
    in_front = z > 0
    zs = np.where(in_front, z, 1.0)
    uv = np.stack(
        [intrinsics.fx * p_cam[:, 0] / zs + intrinsics.cx,
         intrinsics.fy * p_cam[:, 1] / zs + intrinsics.cy],
        axis=1,
    )
    return uv, z, in_front


def unproject(
    intrinsics: CameraIntrinsics, pose: CameraPose, pixel, depth: float
) -> np.ndarray:
    """Lift a pixel with metric depth back to a world point (exact inverse of project)."""
    if not np.isfinite(depth) or depth <= 0:
        raise InvalidDepth(f"depth must be finite and > 0, got {depth}")
    u, v = pixel
    x = (u - intrinsics.cx) / intrinsics.fx * depth
    y = (v - intrinsics.cy) / intrinsics.fy * depth
    p_cam = np.array([x, y, depth], dtype=np.float64)
    return pose.rotation @ p_cam + pose.position


def unproject_many(
    intrinsics: CameraIntrinsics, pose: CameraPose, uv: np.ndarray, depth: np.ndarray
) -> np.ndarray:
    """Vectorized unproject for (N, 2) pixels and (N,) positive depths."""
    uv = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
    depth = np.asarray(depth, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(depth)) or np.any(depth <= 0):
        raise InvalidDepth("all depths must be finite and > 0")
    x = (uv[:, 0] - intrinsics.cx) / intrinsics.fx * depth
    y = (uv[:, 1] - intrinsics.cy) / intrinsics.fy * depth
    p_cam = np.stack([x, y, depth], axis=1)
    return p_cam @ pose.rotation.T + pose.position
