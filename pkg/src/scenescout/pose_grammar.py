"""Parse viewpoint proposals (grid point + orientation word) and build camera poses."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .camera import CameraIntrinsics, CameraPose
from .errors import LatticeExhausted, OutOfGrid
from .solp import DIRECTION_VECTORS, ORIENTATIONS, GridSpec, clamp_grid_point, grid_to_world

_PAIR_RE = re.compile(r"\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)")
_ORIENT_RE = re.compile(r"\b(front|back|left|right)\b", re.IGNORECASE)


@dataclass(frozen=True)
class ViewProposal:
    """One proposed viewpoint: lattice point plus one of the four orientation words."""

    grid_point: tuple[int, int]
    orientation: str
    raw_span: str = ""

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}")

    @property
    def key(self) -> tuple[int, int, str]:
        return (self.grid_point[0], self.grid_point[1], self.orientation)


@dataclass
class CameraRigConfig:
    """Fixed camera parameters the planner cannot change: eye height above the
    floor, downward pitch, and intrinsics."""

    eye_height: float = 1.6
    pitch_down_deg: float = 15.0
    intrinsics: CameraIntrinsics | None = None

    def __post_init__(self):
        if self.eye_height <= 0:
            raise ValueError("eye_height must be > 0")
        if not (0 <= self.pitch_down_deg < 90):
            raise ValueError("pitch_down_deg must be in [0, 90)")
        if self.intrinsics is None:
            self.intrinsics = CameraIntrinsics.default()


def parse_view_proposals(text: str) -> list[ViewProposal]:
    """Extract every "(i, j)" integer pair bound to an orientation word.

    Rules, applied per line: integer pairs and orientation keywords are
    collected in positional order; each pair greedily claims the nearest
    unclaimed keyword on its line. Pairs without a keyword (and keywords
    without a pair) are dropped. Total: never raises, any text yields a
    (possibly empty) well-formed list in order of appearance.
    """
    proposals: list[ViewProposal] = []
    for line in text.splitlines():
        pairs = [(m.start(), (int(m.group(1)), int(m.group(2))), m.group(0))
                 for m in _PAIR_RE.finditer(line)]
        if not pairs:
            continue
        kws = [(m.start(), m.group(1).lower()) for m in _ORIENT_RE.finditer(line)]
        taken = [False] * len(kws)
        for pos, point, span in pairs:
            best, best_dist = -1, None
            for idx, (kpos, _) in enumerate(kws):
                if taken[idx]:
                    continue
                dist = abs(kpos - pos)
                if best_dist is None or dist < best_dist:
                    best, best_dist = idx, dist
            if best < 0:
                continue
            taken[best] = True
            proposals.append(ViewProposal(point, kws[best][1],
                                          raw_span=line.strip()))
    return proposals


def orientation_forward(orientation: str, pitch_down_deg: float) -> np.ndarray:
    """World-frame view direction: the orientation's horizontal vector rotated
    pitch_down degrees toward -z."""
    horiz = DIRECTION_VECTORS[orientation]
    pitch = np.deg2rad(pitch_down_deg)
    return np.cos(pitch) * horiz + np.sin(pitch) * np.array([0.0, 0.0, -1.0])


def pose_from_proposal(
    proposal: ViewProposal,
    spec: GridSpec,
    rig: CameraRigConfig,
    floor_z: float = 0.0,
) -> CameraPose:
    """Camera pose standing at the proposal's lattice point.

    Position is the grid point at floor_z + eye_height; camera +z is the
    pitched forward direction, +x the horizontal right of forward, +y
    completes the right-handed frame pointing image-down.
    """
    i, j = proposal.grid_point
    if not (0 <= i <= spec.density and 0 <= j <= spec.density):
        raise OutOfGrid(f"proposal {proposal.grid_point} outside lattice")
    x, y = grid_to_world(spec, (i, j))
    position = np.array([x, y, floor_z + rig.eye_height])

    forward = orientation_forward(proposal.orientation, rig.pitch_down_deg)
    forward = forward / np.linalg.norm(forward)
    up = np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, up)
    right = right / np.linalg.norm(right)
    down = np.cross(forward, right)  # image-down axis
    rotation = np.stack([right, down, forward], axis=1)
    return CameraPose(rotation, position)


def all_lattice_pairs(spec: GridSpec) -> list[tuple[int, int, str]]:
    """Every (i, j, orientation) combination, in deterministic order."""
    return [
        (i, j, o)
        for i in range(spec.density + 1)
        for j in range(spec.density + 1)
        for o in ORIENTATIONS
    ]


def sanitize_proposals(
    new: list[ViewProposal],
    existing: list[ViewProposal],
    spec: GridSpec,
    rng: int | np.random.Generator = 0,
) -> list[ViewProposal]:
    """Clamp out-of-lattice points and replace duplicates with unused pairs.

    Exact duplicates (same point and orientation) of existing proposals or of
    earlier entries in the list are swapped for a seeded-random unused pair,
    preserving the count.

    Raises:
        LatticeExhausted: no unused (point, orientation) pairs remain.
    """
    rng = np.random.default_rng(rng) if isinstance(rng, int) else rng
    used = {p.key for p in existing}
    out: list[ViewProposal] = []
    for prop in new:
        point = clamp_grid_point(spec, prop.grid_point)
        candidate = ViewProposal(point, prop.orientation, prop.raw_span)
        if candidate.key in used:
            free = [p for p in all_lattice_pairs(spec) if p not in used]
            if not free:
                raise LatticeExhausted("all (grid point, orientation) pairs in use")
            i, j, orient = free[rng.integers(len(free))]
            candidate = ViewProposal((i, j), orient, raw_span="<replacement for duplicate>")
        used.add(candidate.key)
        out.append(candidate)
    return out
