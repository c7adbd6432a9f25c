"""Trajectory file parsing and timestamp association.

Three on-disk formats are supported:

* TUM: ``t tx ty tz qx qy qz qw`` per line, ``#`` comments.
* KITTI: 12 values per line, the top three rows of a 4x4 homogeneous
  pose (row-major); timestamps come from an optional companion file
  with one value per line, else from a fixed frame rate.
* EuRoC ground-truth state CSV: ``#`` header, nanosecond timestamps,
  quaternion stored scalar-first.

Parsed quaternions are normalized and sign-canonicalized to w >= 0 so
that pose equality is well defined.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Union

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import (
    EmptyTrajectory,
    LengthMismatch,
    MalformedLine,
    MissingHeader,
    NonMonotonicTimestamps,
    NonRotationMatrix,
)

#: Default association tolerance: half a frame at 25 Hz.
DEFAULT_MAX_DIFF = 0.02

TextSource = Union[str, IO[str], Iterable[str]]


class SourceFormat(Enum):
    TUM = "tum"
    KITTI = "kitti"
    EUROC_GT = "euroc_gt"


@dataclass(frozen=True)
class StampedPose:
    """One pose sample: time (s), position (m), orientation quaternion (x, y, z, w)."""

    t: float
    position: np.ndarray
    orientation: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, StampedPose):
            return NotImplemented
        return (
            self.t == other.t
            and np.array_equal(self.position, other.position)
            and np.array_equal(self.orientation, other.orientation)
        )

    def rotation_matrix(self) -> np.ndarray:
        return Rotation.from_quat(self.orientation).as_matrix()


@dataclass(frozen=True)
class Trajectory:
    poses: tuple[StampedPose, ...]
    source_format: SourceFormat

    def __len__(self) -> int:
        return len(self.poses)

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([p.t for p in self.poses])

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.poses])

    def span(self) -> float:
        return self.poses[-1].t - self.poses[0].t


@dataclass(frozen=True)
class AssociatedPairs:
    """Estimate poses matched one-to-one to ground-truth poses by timestamp."""

    pairs: tuple[tuple[StampedPose, StampedPose], ...]
    max_diff: float

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def est_positions(self) -> np.ndarray:
        return np.array([e.position for e, _ in self.pairs])

    @property
    def gt_positions(self) -> np.ndarray:
        return np.array([g.position for _, g in self.pairs])


def _lines(source: TextSource) -> Iterable[str]:
    if isinstance(source, str):
        return source.splitlines()
    return source


def _parse_floats(fields: list[str], line_no: int) -> list[float]:
    try:
        values = [float(f) for f in fields]
    except ValueError:
        raise MalformedLine(line_no, "non-numeric field") from None
    if not all(np.isfinite(values)):
        raise MalformedLine(line_no, "non-finite field")
    return values


def _normalized_quat(q: np.ndarray, line_no: int) -> np.ndarray:
    norm = float(np.linalg.norm(q))
    if norm < 1e-12:
        raise MalformedLine(line_no, "zero-norm quaternion")
    q = q / norm
    if q[3] < 0:  # canonical sign: w >= 0
        q = -q
    return q


def _check_monotonic(poses: list[StampedPose], line_nos: list[int]) -> None:
    for k in range(1, len(poses)):
        if poses[k].t <= poses[k - 1].t:
            raise NonMonotonicTimestamps(line_nos[k])


def parse_tum(source: TextSource) -> Trajectory:
    """Parse a TUM-format trajectory: ``t tx ty tz qx qy qz qw`` per line."""
    poses: list[StampedPose] = []
    line_nos: list[int] = []
    for line_no, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 8:
            raise MalformedLine(line_no, f"expected 8 fields, got {len(fields)}")
        v = _parse_floats(fields, line_no)
        quat = _normalized_quat(np.array(v[4:8]), line_no)
        poses.append(StampedPose(t=v[0], position=np.array(v[1:4]), orientation=quat))
        line_nos.append(line_no)
    if not poses:
        raise EmptyTrajectory("no poses in TUM input")
    _check_monotonic(poses, line_nos)
    return Trajectory(poses=tuple(poses), source_format=SourceFormat.TUM)


def write_tum(traj: Trajectory) -> str:
    """Serialize to TUM format at full float precision (round-trip support)."""
    out = ["# t tx ty tz qx qy qz qw"]
    for p in traj.poses:
        fields = [p.t, *p.position.tolist(), *p.orientation.tolist()]
        out.append(" ".join(repr(f) for f in fields))
    return "\n".join(out) + "\n"


#: Largest Frobenius deviation from the nearest rotation tolerated in KITTI input.
KITTI_ROTATION_TOL = 1e-3


def _nearest_rotation(m: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(m)
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def parse_kitti(
    pose_source: TextSource,
    times_source: TextSource | None = None,
    default_rate_hz: float = 10.0,
) -> Trajectory:
    """Parse KITTI odometry poses (12 values: 3x4 row-major pose matrix).

    Timestamps come from ``times_source`` (one value per line) when given,
    else pose i is stamped ``i / default_rate_hz``.
    """
    rows: list[tuple[np.ndarray, np.ndarray]] = []
    line_nos: list[int] = []
    for line_no, raw in enumerate(_lines(pose_source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 12:
            raise MalformedLine(line_no, f"expected 12 fields, got {len(fields)}")
        v = np.array(_parse_floats(fields, line_no)).reshape(3, 4)
        rot_raw = v[:, :3]
        rot = _nearest_rotation(rot_raw)
        deviation = float(np.linalg.norm(rot_raw - rot))
        if deviation > KITTI_ROTATION_TOL:
            raise NonRotationMatrix(line_no, deviation)
        rows.append((rot, v[:, 3]))
        line_nos.append(line_no)
    if not rows:
        raise EmptyTrajectory("no poses in KITTI input")

    if times_source is not None:
        times: list[float] = []
        for line_no, raw in enumerate(_lines(times_source), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            times.append(_parse_floats([line.split()[0]], line_no)[0])
        if len(times) != len(rows):
            raise LengthMismatch(
                f"{len(rows)} poses but {len(times)} timestamps"
            )
    else:
        times = [i / default_rate_hz for i in range(len(rows))]

    poses = []
    for t, (rot, trans) in zip(times, rows):
        quat = Rotation.from_matrix(rot).as_quat()
        quat = _normalized_quat(np.asarray(quat), 0)
        poses.append(StampedPose(t=t, position=trans.copy(), orientation=quat))
    _check_monotonic(poses, line_nos)
    return Trajectory(poses=tuple(poses), source_format=SourceFormat.KITTI)


def parse_euroc_gt(source: TextSource) -> Trajectory:
    """Parse a EuRoC ground-truth state CSV.

    Field 0 is a nanosecond timestamp, fields 1-3 position, fields 4-7 a
    scalar-first quaternion; trailing fields (velocity, biases) are ignored.
    """
    poses: list[StampedPose] = []
    line_nos: list[int] = []
    saw_header = False
    for line_no, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            saw_header = True
            continue
        if not saw_header:
            raise MissingHeader("expected a '#' header line before data")
        fields = [f.strip() for f in line.split(",")]
        if len(fields) < 8:
            raise MalformedLine(line_no, f"expected >= 8 fields, got {len(fields)}")
        v = _parse_floats(fields[:8], line_no)
        t = v[0] * 1e-9
        qw, qx, qy, qz = v[4:8]
        quat = _normalized_quat(np.array([qx, qy, qz, qw]), line_no)
        poses.append(StampedPose(t=t, position=np.array(v[1:4]), orientation=quat))
        line_nos.append(line_no)
    if not saw_header:
        raise MissingHeader("no '#' header line")
    if not poses:
        raise EmptyTrajectory("no poses in EuRoC input")
    _check_monotonic(poses, line_nos)
    return Trajectory(poses=tuple(poses), source_format=SourceFormat.EUROC_GT)


def associate(est: Trajectory, gt: Trajectory, max_diff: float = DEFAULT_MAX_DIFF) -> AssociatedPairs:
    """Match estimate poses to ground-truth poses by timestamp.

    Greedy one-to-one matching: candidate pairs within ``max_diff`` are
    accepted in ascending |dt| order, skipping any candidate whose
    estimate or ground-truth pose is already matched. Deterministic:
    ties on |dt| resolve by (estimate index, ground-truth index).
    """
    if max_diff <= 0:
        raise ValueError("max_diff must be positive")
    est_t = [p.t for p in est.poses]
    gt_t = [p.t for p in gt.poses]

    candidates: list[tuple[float, int, int]] = []
    for i, t in enumerate(est_t):
        lo = bisect.bisect_left(gt_t, t - max_diff)
        hi = bisect.bisect_right(gt_t, t + max_diff)
        for j in range(lo, hi):
            candidates.append((abs(t - gt_t[j]), i, j))
    candidates.sort()

    used_est: set[int] = set()
    used_gt: set[int] = set()
    matched: list[tuple[int, int]] = []
    for _, i, j in candidates:
        if i in used_est or j in used_gt:
            continue
        used_est.add(i)
        used_gt.add(j)
        matched.append((i, j))
    matched.sort()  # order by estimate timestamp

    pairs = tuple((est.poses[i], gt.poses[j]) for i, j in matched)
    return AssociatedPairs(pairs=pairs, max_diff=max_diff)
