import numpy as np
import pytest

from scenescout.scene_io import build_toy_room, default_toy_room


@pytest.fixture(scope="session")
def toy_room3():
    """(spec, mesh, gt_cloud) for the 3-class fixture room."""
    spec = default_toy_room(n_classes=3, seed=7)
    mesh, cloud = build_toy_room(spec)
    return spec, mesh, cloud


@pytest.fixture(scope="session")
def toy_room4():
    spec = default_toy_room(n_classes=4, seed=7)
    mesh, cloud = build_toy_room(spec)
    return spec, mesh, cloud


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish proper rotation via QR with sign fixing."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
