"""Trajectory accuracy metrics: absolute-pose RMSE, relative pose error,
track-loss rate, and per-run outcome classification.

Two error measures are computed. Absolute RMSE (m) is the root mean
square of translational residuals after an optional least-squares
alignment (rigid or similarity). Relative pose error (m/s) compares
body-frame displacements over fixed time intervals, normalized by the
interval length; it is invariant to a global rigid transform of either
trajectory, so no alignment is needed.

A run counts as failed when more than one third of the ground-truth
time span is not covered by matched poses.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import (
    AllFailed,
    DegenerateConfiguration,
    EmptyInput,
    NoValidIntervals,
    TooFewPoints,
)
from .traj_io import DEFAULT_MAX_DIFF, AssociatedPairs, Trajectory, associate

#: Track-loss fraction beyond which a run is classified as failed.
LOSS_FAILURE_THRESHOLD = 1.0 / 3.0


class Alignment(Enum):
    NONE = "none"
    SE3 = "se3"
    SIM3 = "sim3"


class RunStatus(Enum):
    SUCCESS = "success"
    FAILURE = "failure"


@dataclass(frozen=True)
class SimilarityTransform:
    """p -> scale * R @ p + translation."""

    scale: float
    rotation: np.ndarray  # unit quaternion, (x, y, z, w)
    translation: np.ndarray

    def rotation_matrix(self) -> np.ndarray:
        return Rotation.from_quat(self.rotation).as_matrix()

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return self.scale * points @ self.rotation_matrix().T + self.translation


@dataclass(frozen=True)
class EvalConfig:
    max_diff: float = DEFAULT_MAX_DIFF
    align: Alignment = Alignment.SE3
    rpe_delta: float = 1.0


@dataclass(frozen=True)
class RunResult:
    """Outcome of evaluating one run against ground truth."""

    rmse_m: float | None
    rpe_mps: float | None
    loss_rate: float
    status: RunStatus
    n_matched: int


def umeyama_align(src, dst, with_scale: bool = False) -> SimilarityTransform:
    """Least-squares similarity (or rigid) transform mapping src onto dst.

    Minimizes sum ||dst_i - (s * R @ src_i + t)||^2 over rotation R,
    translation t, and (when ``with_scale``) scale s, via the closed-form
    SVD solution of the cross-covariance.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape != dst.shape:
        raise ValueError(f"shape mismatch: {src.shape} vs {dst.shape}")
    n = src.shape[0]
    if n < 3:
        raise TooFewPoints(f"need >= 3 point pairs, got {n}")

    mu_src = src.mean(axis=0)
    mu_dst = dst.mean(axis=0)
    src_c = src - mu_src
    dst_c = dst - mu_dst

    cov = dst_c.T @ src_c / n
    u, d, vt = np.linalg.svd(cov)
    # Rank < 2 leaves the rotation underdetermined (collinear or coincident points).
    if d[0] < 1e-300 or d[1] <= d[0] * 1e-9:
        raise DegenerateConfiguration("cross-covariance is rank deficient")

    s_diag = np.array([1.0, 1.0, np.sign(np.linalg.det(u) * np.linalg.det(vt))])
    rot = u @ np.diag(s_diag) @ vt

    if with_scale:
        var_src = (src_c ** 2).sum() / n
        scale = float((d * s_diag).sum() / var_src)
    else:
        scale = 1.0

    translation = mu_dst - scale * rot @ mu_src
    quat = Rotation.from_matrix(rot).as_quat()
    if quat[3] < 0:
        quat = -quat
    return SimilarityTransform(scale=scale, rotation=np.asarray(quat), translation=translation)


def ate_rmse(pairs: AssociatedPairs, align: Alignment = Alignment.SE3) -> float:
    """Absolute trajectory RMSE (m) over matched pairs, after optional alignment."""
    if len(pairs) == 0:
        raise EmptyInput("no associated pairs")
    est = pairs.est_positions
    gt = pairs.gt_positions
    if align is not Alignment.NONE:
        if len(pairs) < 3:
            raise TooFewPoints("alignment needs >= 3 pairs")
        transform = umeyama_align(est, gt, with_scale=(align is Alignment.SIM3))
        est = transform.apply(est)
    residuals = est - gt
    return float(np.sqrt((residuals ** 2).sum(axis=1).mean()))


def rpe_rmse(pairs: AssociatedPairs, delta: float = 1.0) -> float:
    """RMSE of relative pose error (m/s) over intervals of roughly ``delta`` seconds.

    For each matched pose i the pose j closest to t_i + delta (within the
    pair set's association tolerance) defines an interval. The error is the
    norm of the difference between ground-truth and estimated body-frame
    displacements over the interval, divided by the interval length.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    n = len(pairs)
    if n < 2:
        raise NoValidIntervals("need at least two pairs")

    ts = np.array([g.t for _, g in pairs.pairs])
    est_pos = pairs.est_positions
    gt_pos = pairs.gt_positions
    est_rot = Rotation.from_quat(np.array([e.orientation for e, _ in pairs.pairs]))
    gt_rot = Rotation.from_quat(np.array([g.orientation for _, g in pairs.pairs]))
    est_rot_mats = est_rot.as_matrix()
    gt_rot_mats = gt_rot.as_matrix()

    order = np.argsort(ts, kind="stable")
    sorted_ts = ts[order]

    sq_errors = []
    for i in range(n):
        target = ts[i] + delta
        pos = int(np.searchsorted(sorted_ts, target))
        best_j = None
        best_gap = None
        for cand in (pos - 1, pos):
            if 0 <= cand < n:
                gap = abs(sorted_ts[cand] - target)
                if best_gap is None or gap < best_gap:
                    best_gap = gap
                    best_j = int(order[cand])
        if best_j is None or best_gap > pairs.max_diff:
            continue
        interval = ts[best_j] - ts[i]
        if interval <= 0:
            continue
        d_gt = gt_rot_mats[i].T @ (gt_pos[best_j] - gt_pos[i])
        d_est = est_rot_mats[i].T @ (est_pos[best_j] - est_pos[i])
        sq_errors.append(float(((d_gt - d_est) ** 2).sum()) / interval ** 2)
    if not sq_errors:
        raise NoValidIntervals(f"no interval of {delta} s fits the matched span")
    return float(np.sqrt(np.mean(sq_errors)))


def track_loss_rate(pairs: AssociatedPairs, gt: Trajectory) -> float:
    """Fraction of the ground-truth time span not covered by matched poses.

    Each ground-truth pose covers the interval up to its successor; the
    covered time is the sum over matched poses.
    """
    if len(gt) == 0:
        raise EmptyInput("ground truth is empty")
    total = gt.span()
    if total <= 0:
        return 0.0 if len(pairs) > 0 else 1.0
    index_of = {p.t: k for k, p in enumerate(gt.poses)}
    matched = {index_of[g.t] for _, g in pairs.pairs}
    ts = gt.timestamps
    covered = sum(ts[k + 1] - ts[k] for k in matched if k + 1 < len(gt))
    return 1.0 - covered / total


def run_result(
    est: Trajectory | None,
    gt: Trajectory,
    config: EvalConfig = EvalConfig(),
) -> RunResult:
    """Evaluate one run: loss rate, failure status, and both accuracy metrics.

    Metric computations that cannot proceed (too few matches, degenerate
    geometry, span shorter than the interval) yield absent fields rather
    than errors; a lost run is still a valid observation.
    """
    if len(gt) == 0:
        raise EmptyInput("ground truth is empty")
    if est is None or len(est) == 0:
        return RunResult(
            rmse_m=None, rpe_mps=None, loss_rate=1.0,
            status=RunStatus.FAILURE, n_matched=0,
        )

    pairs = associate(est, gt, config.max_diff)
    loss = track_loss_rate(pairs, gt)

    rmse = None
    try:
        rmse = ate_rmse(pairs, config.align)
    except (TooFewPoints, EmptyInput, DegenerateConfiguration):
        pass
    rpe = None
    try:
        rpe = rpe_rmse(pairs, config.rpe_delta)
    except NoValidIntervals:
        pass

    status = RunStatus.FAILURE if loss > LOSS_FAILURE_THRESHOLD else RunStatus.SUCCESS
    return RunResult(
        rmse_m=rmse, rpe_mps=rpe, loss_rate=loss,
        status=status, n_matched=len(pairs),
    )


def average_over_successes(results, metric: str = "rmse") -> float:
    """Arithmetic mean of a metric over successful runs only.

    ``metric`` is "rmse" or "rpe". Successful entries with the metric
    absent carry no information and are skipped.
    """
    if metric not in ("rmse", "rpe"):
        raise ValueError(f"unknown metric {metric!r}")
    attr = "rmse_m" if metric == "rmse" else "rpe_mps"
    values = [
        getattr(r, attr)
        for r in results
        if r.status is RunStatus.SUCCESS and getattr(r, attr) is not None
    ]
    if not values:
        raise AllFailed("no successful entries to average")
    return float(np.mean(values))
