import numpy as np
import pytest

from scenescout.camera import CameraIntrinsics
from scenescout.errors import LatticeExhausted, OutOfGrid
from scenescout.pose_grammar import (
    CameraRigConfig,
    ViewProposal,
    all_lattice_pairs,
    orientation_forward,
    parse_view_proposals,
    pose_from_proposal,
    sanitize_proposals,
)
from scenescout.scene_io import SceneBounds
from scenescout.solp import ORIENTATIONS, make_grid

# 20 phrasings: (text, expected [(point, orientation), ...])
PARSE_FIXTURE = [
    ("1. Position: (3, 5), Orientation: left", [((3, 5), "left")]),
    ("(0,0) front\n(2,4) back", [((0, 0), "front"), ((2, 4), "back")]),
    ("Position (1, 2) facing RIGHT", [((1, 2), "right")]),
    ("- (5, 5), orientation: front", [((5, 5), "front")]),
    ("I suggest (3,3) looking left.", [((3, 3), "left")]),
    ("camera at (7, 0); direction: back", [((7, 0), "back")]),
    ("1) (0, 8) front\n2) (8, 0) back\n3) (4, 4) left",
     [((0, 8), "front"), ((8, 0), "back"), ((4, 4), "left")]),
    ("Shot one: grid point (2, 2), oriented front", [((2, 2), "front")]),
    ("(0,0) front and (1,1) back", [((0, 0), "front"), ((1, 1), "back")]),
    ("* Position: (6,3) | Orientation: right", [((6, 3), "right")]),
    ("Front view from (4, 0)", [((4, 0), "front")]),
    ("position=(5,7), orientation=back", [((5, 7), "back")]),
    ("Take a picture at ( 2 , 7 ) facing left", [((2, 7), "left")]),
    ("(-1, 9) right", [((-1, 9), "right")]),  # clamping happens later
    # malformed: no proposals
    ("the scene has (many) chairs facing left", []),
    ("no coordinates here, just prose about the room", []),
    ("(1.5, 2) front", []),
    ("front back left right", []),
    ("point (3, 4) with no direction word", []),
    ("(2, 2) upward", []),
]


class TestParseViewProposals:
    @pytest.mark.parametrize("text,expected", PARSE_FIXTURE,
                             ids=[f"case{i:02d}" for i in range(len(PARSE_FIXTURE))])
    def test_fixture(self, text, expected):
        got = [(p.grid_point, p.orientation) for p in parse_view_proposals(text)]
        assert got == expected

    def test_order_preserved(self):
        text = "3. (9, 9) back\n1. (0, 0) front\n2. (1, 1) left"
        got = [p.grid_point for p in parse_view_proposals(text)]
        assert got == [(9, 9), (0, 0), (1, 1)]

    def test_raw_span_retained(self):
        props = parse_view_proposals("  Position: (3, 5), Orientation: left  ")
        assert props[0].raw_span == "Position: (3, 5), Orientation: left"

    def test_total_on_fuzz(self):
        rng = np.random.default_rng(123)
        alphabet = list("(),0123456789 frontbackleftrighta.\n:;[]")
        for _ in range(10_000):
            n = int(rng.integers(0, 60))
            text = "".join(rng.choice(alphabet, size=n))
            props = parse_view_proposals(text)
            for p in props:
                assert p.orientation in ORIENTATIONS
                assert isinstance(p.grid_point[0], int)
                assert isinstance(p.grid_point[1], int)


def grid8():
    return make_grid(SceneBounds([0, 0, 0], [8, 8, 3]), 8)


class TestPoseFromProposal:
    def test_front_level(self):
        rig = CameraRigConfig(eye_height=1.6, pitch_down_deg=0.0)
        pose = pose_from_proposal(ViewProposal((0, 0), "front"), grid8(), rig, 0.0)
        np.testing.assert_allclose(pose.position, [0, 0, 1.6])
        np.testing.assert_allclose(pose.rotation[:, 2], [0, 1, 0], atol=1e-12)

    def test_left_pitched(self):
        rig = CameraRigConfig(pitch_down_deg=15.0)
        pose = pose_from_proposal(ViewProposal((4, 4), "left"), grid8(), rig, 0.0)
        c, s = np.cos(np.deg2rad(15)), np.sin(np.deg2rad(15))
        np.testing.assert_allclose(pose.rotation[:, 2], [-c, 0, -s], atol=1e-9)

    def test_forward_helper_matches(self):
        f = orientation_forward("back", 30.0)
        c, s = np.cos(np.deg2rad(30)), np.sin(np.deg2rad(30))
        np.testing.assert_allclose(f, [0, -c, -s], atol=1e-12)

    def test_rig_rejects_extreme_pitch(self):
        with pytest.raises(ValueError):
            CameraRigConfig(pitch_down_deg=90.0)
        with pytest.raises(ValueError):
            CameraRigConfig(eye_height=0.0)

    def test_out_of_grid(self):
        with pytest.raises(OutOfGrid):
            pose_from_proposal(ViewProposal((9, 0), "front"), grid8(),
                               CameraRigConfig(), 0.0)

    def test_floor_offset(self):
        rig = CameraRigConfig(eye_height=1.2)
        pose = pose_from_proposal(ViewProposal((4, 4), "right"), grid8(), rig,
                                  floor_z=-0.5)
        assert pose.position[2] == pytest.approx(0.7)

    def test_orthonormal_sweep(self):
        spec = make_grid(SceneBounds([0, 0, 0], [6, 4, 3]), 4)
        for orientation in ORIENTATIONS:
            for pitch in (0.0, 15.0, 30.0, 45.0, 60.0):
                rig = CameraRigConfig(pitch_down_deg=pitch,
                                      intrinsics=CameraIntrinsics.default(64))
                for i in range(5):
                    for j in range(5):
                        pose = pose_from_proposal(
                            ViewProposal((i, j), orientation), spec, rig, 0.0)
                        r = pose.rotation
                        assert np.abs(r.T @ r - np.eye(3)).max() < 1e-6
                        assert abs(np.linalg.det(r) - 1) < 1e-6
                        # image-down axis never points upward
                        assert r[2, 1] <= 1e-12


class TestSanitize:
    def test_duplicate_replaced_count_preserved(self):
        spec = grid8()
        props = [ViewProposal((3, 3), "front"), ViewProposal((3, 3), "front")]
        out = sanitize_proposals(props, [], spec, rng=0)
        assert len(out) == 2
        assert len({p.key for p in out}) == 2
        assert out[0].key == (3, 3, "front")

    def test_out_of_lattice_clamped(self):
        spec = grid8()
        out = sanitize_proposals([ViewProposal((99, 99), "front")], [], spec, rng=0)
        assert out[0].grid_point == (8, 8)

    def test_negative_clamped(self):
        spec = grid8()
        out = sanitize_proposals([ViewProposal((-3, 2), "back")], [], spec, rng=0)
        assert out[0].grid_point == (0, 2)

    def test_duplicate_of_existing_replaced(self):
        spec = grid8()
        existing = [ViewProposal((1, 1), "left")]
        out = sanitize_proposals([ViewProposal((1, 1), "left")], existing, spec, rng=1)
        assert out[0].key != (1, 1, "left")

    def test_lattice_exhausted(self):
        spec = make_grid(SceneBounds([0, 0, 0], [2, 2, 2]), 1)
        pairs = all_lattice_pairs(spec)
        assert len(pairs) == 16
        existing = [ViewProposal((i, j), o) for i, j, o in pairs]
        with pytest.raises(LatticeExhausted):
            sanitize_proposals([ViewProposal((0, 0), "front")], existing, spec, rng=0)

    def test_deterministic_replacements(self):
        spec = grid8()
        props = [ViewProposal((3, 3), "front")] * 4
        a = sanitize_proposals(props, [], spec, rng=42)
        b = sanitize_proposals(props, [], spec, rng=42)
        assert [p.key for p in a] == [p.key for p in b]
