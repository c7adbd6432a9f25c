import numpy as np
import pytest

from vobench.traj_io import SourceFormat, StampedPose, Trajectory

IDENTITY_QUAT = np.array([0.0, 0.0, 0.0, 1.0])


def make_traj(times, positions=None, quats=None, fmt=SourceFormat.TUM) -> Trajectory:
    """Trajectory from raw arrays; identity orientation by default."""
    times = list(times)
    if positions is None:
        positions = [np.zeros(3)] * len(times)
    if quats is None:
        quats = [IDENTITY_QUAT] * len(times)
    poses = tuple(
        StampedPose(t=float(t), position=np.asarray(p, dtype=float),
                    orientation=np.asarray(q, dtype=float))
        for t, p, q in zip(times, positions, quats)
    )
    return Trajectory(poses=poses, source_format=fmt)


def line_traj(speed_mps, dt, n, fmt=SourceFormat.TUM) -> Trajectory:
    """Constant-velocity motion along x with identity orientation."""
    times = [i * dt for i in range(n)]
    positions = [np.array([speed_mps * t, 0.0, 0.0]) for t in times]
    return make_traj(times, positions, fmt=fmt)


def random_rotation(rng) -> np.ndarray:
    """Uniform-ish random rotation matrix from a random quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    x, y, z, w = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


@pytest.fixture
def rng():
    return np.random.default_rng(0)
