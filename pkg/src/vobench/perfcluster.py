"""Run-outcome clustering: saturate and normalize per-run errors, cluster
the (loss rate, normalized error) points with k-means++, and name the
clusters as performance categories.

Category naming is positional: the highest-loss centroid is Fail, the
next Low (runs lost partway through), and the two low-loss centroids
split into High and Medium by error. Three-cluster protocols merge Fail
into Low.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import catalog as cat
from .dtree import CATALOG_SCHEMA, DataSet
from .errors import (
    AmbiguousCentroids,
    DuplicateRunKey,
    EmptyDataSet,
    KTooLarge,
    NegativeError,
)

#: Errors are saturated at this value (m or m/s) before normalization.
ERROR_CAP = 2.0

#: Lloyd iteration limit.
MAX_ITER = 100


class Category(Enum):
    FAIL = "Fail"
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"


@dataclass(frozen=True)
class RunObservation:
    """One (sequence, algorithm, run) outcome as a 2-D point."""

    sequence: str
    algorithm: str
    run_id: int
    loss_rate: float
    err_norm: float

    @property
    def point(self) -> tuple[float, float]:
        return (self.loss_rate, self.err_norm)


@dataclass(frozen=True)
class Clustering:
    k: int
    centroids: tuple[tuple[float, float], ...]
    assignment: tuple[int, ...]
    sse_history: tuple[float, ...]
    categories: dict[int, Category] | None = None


def preprocess(raw_err: float | None, cap: float = ERROR_CAP) -> float:
    """Saturate an error at ``cap`` and normalize to [0, 1].

    An absent error (a run with no usable measurement) saturates to 1.
    """
    if raw_err is None:
        return 1.0
    if raw_err < 0:
        raise NegativeError(f"error must be non-negative, got {raw_err}")
    return min(raw_err, cap) / cap


def build_observations(rows, cap: float = ERROR_CAP) -> list[RunObservation]:
    """One observation per run row.

    Rows are mappings with keys sequence, algorithm, run_id, loss_rate,
    raw_err (raw_err may be None). The (sequence, algorithm, run_id)
    key must be unique.
    """
    seen: set[tuple[str, str, int]] = set()
    observations = []
    for row in rows:
        key = (row["sequence"], row["algorithm"], int(row["run_id"]))
        if key in seen:
            raise DuplicateRunKey(key)
        seen.add(key)
        loss = float(row["loss_rate"])
        if not 0.0 <= loss <= 1.0:
            raise ValueError(f"loss_rate out of [0, 1]: {loss}")
        observations.append(RunObservation(
            sequence=key[0],
            algorithm=key[1],
            run_id=key[2],
            loss_rate=loss,
            err_norm=preprocess(row["raw_err"], cap),
        ))
    return observations


OBSERVATION_COLUMNS = ("sequence", "algorithm", "run_id", "loss_rate", "raw_err")


def parse_observation_rows(csv_text: str) -> list[dict]:
    """Read the observation CSV into raw row mappings (raw_err None when empty)."""
    reader = csv.DictReader(io.StringIO(csv_text))
    if reader.fieldnames is None or any(
        c not in reader.fieldnames for c in OBSERVATION_COLUMNS
    ):
        raise ValueError(
            f"observation CSV needs columns {', '.join(OBSERVATION_COLUMNS)}"
        )
    rows = []
    for row in reader:
        raw = (row["raw_err"] or "").strip()
        rows.append({
            "sequence": row["sequence"],
            "algorithm": row["algorithm"],
            "run_id": int(row["run_id"]),
            "loss_rate": float(row["loss_rate"]),
            "raw_err": float(raw) if raw else None,
        })
    return rows


def write_clustered_csv(observations, clustering: Clustering) -> str:
    """Observation CSV with cluster index and category columns appended."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(OBSERVATION_COLUMNS[:4] + ("err_norm", "cluster", "category"))
    for obs, cluster in zip(observations, clustering.assignment):
        category = ""
        if clustering.categories is not None:
            category = clustering.categories[cluster].value
        writer.writerow([
            obs.sequence, obs.algorithm, obs.run_id,
            repr(obs.loss_rate), repr(obs.err_norm), cluster, category,
        ])
    return out.getvalue()


def _sse(points: np.ndarray, centroids: np.ndarray, assignment: np.ndarray) -> float:
    return float(((points - centroids[assignment]) ** 2).sum())


def kmeanspp(points, k: int, seed: int = 0) -> Clustering:
    """k-means++ seeding followed by Lloyd iteration to convergence.

    Deterministic for a given seed and input order. Empty clusters are
    repaired by reseeding from the point farthest from its assigned
    centroid. The per-iteration SSE trace is kept (and checked to be
    non-increasing).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array")
    n = len(pts)
    n_distinct = len(np.unique(pts, axis=0))
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n_distinct:
        raise KTooLarge(f"k={k} exceeds {n_distinct} distinct points")

    rng = np.random.default_rng(seed)
    centroids = np.empty((k, 2))
    centroids[0] = pts[int(rng.integers(n))]
    for c in range(1, k):
        d2 = ((pts[:, None, :] - centroids[None, :c, :]) ** 2).sum(-1).min(axis=1)
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            centroids[c] = pts[int(rng.choice(n, p=probs))]
        else:
            centroids[c] = pts[int(rng.integers(n))]

    assignment = None
    history: list[float] = []
    for _ in range(MAX_ITER):
        d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(-1)
        new_assignment = d2.argmin(axis=1)
        for c in range(k):
            if not (new_assignment == c).any():
                own = d2[np.arange(n), new_assignment]
                centroids[c] = pts[int(own.argmax())]
                d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(-1)
                new_assignment = d2.argmin(axis=1)
        sse = _sse(pts, centroids, new_assignment)
        if history and sse > history[-1] * (1 + 1e-12) + 1e-12:
            raise AssertionError("Lloyd SSE increased")
        history.append(sse)
        if assignment is not None and (new_assignment == assignment).all():
            break
        assignment = new_assignment
        for c in range(k):
            centroids[c] = pts[assignment == c].mean(axis=0)

    return Clustering(
        k=k,
        centroids=tuple((float(x), float(y)) for x, y in centroids),
        assignment=tuple(int(a) for a in assignment),
        sse_history=tuple(history),
    )


def label_clusters(clustering: Clustering, k: int | None = None) -> dict[int, Category]:
    """Map cluster indices to performance categories by centroid position.

    Centroids sort by loss rate (descending, ties by error descending):
    with four clusters the order is Fail, Low, then High/Medium by
    ascending error; with three, Low then High/Medium.
    """
    if k is None:
        k = clustering.k
    if k != clustering.k:
        raise ValueError(f"k={k} does not match clustering with {clustering.k} clusters")
    if k not in (3, 4):
        raise ValueError("category naming is defined for k in {3, 4}")

    cents = clustering.centroids
    for a in range(k):
        for b in range(a + 1, k):
            if abs(cents[a][0] - cents[b][0]) < 1e-12 and abs(cents[a][1] - cents[b][1]) < 1e-12:
                raise AmbiguousCentroids(f"clusters {a} and {b} have coincident centroids")

    by_loss = sorted(range(k), key=lambda i: (-cents[i][0], -cents[i][1]))
    categories: dict[int, Category] = {}
    if k == 4:
        categories[by_loss[0]] = Category.FAIL
        categories[by_loss[1]] = Category.LOW
        rest = by_loss[2:]
    else:
        categories[by_loss[0]] = Category.LOW
        rest = by_loss[1:]
    by_err = sorted(rest, key=lambda i: (cents[i][1], cents[i][0]))
    categories[by_err[0]] = Category.HIGH
    categories[by_err[1]] = Category.MEDIUM
    return categories


def with_categories(clustering: Clustering) -> Clustering:
    """Clustering with its category map filled in."""
    return Clustering(
        k=clustering.k,
        centroids=clustering.centroids,
        assignment=clustering.assignment,
        sse_history=clustering.sse_history,
        categories=label_clusters(clustering),
    )


def observation_dataset(observations, clustering: Clustering, records) -> DataSet:
    """Observations joined to catalog properties, categories as labels.

    Predictors are the catalog properties minus revisit frequency (the
    clustered outcomes come from too few algorithms to support it).
    Sequence names resolve through the catalog's alias table.
    """
    if clustering.categories is None:
        raise ValueError("clustering has no category map; call with_categories first")
    schema = tuple((n, v) for n, v in CATALOG_SCHEMA if n != "revisit_freq")
    labels = tuple(c.value for c in Category)
    rows = []
    for obs, cluster in zip(observations, clustering.assignment):
        rec = cat.resolve_sequence_name(obs.sequence, records)
        if rec is None:
            raise KeyError(f"sequence {obs.sequence!r} not found in catalog")
        values = {
            "scene": rec.scene.value,
            "duration": rec.duration.value,
            "motion_dyn": rec.motion_dyn.value,
            "environ_dyn": rec.environ_dyn.value,
        }
        rows.append((values, clustering.categories[cluster].value))
    if not rows:
        raise EmptyDataSet("no observations to train on")
    return DataSet(schema=schema, labels=labels, rows=tuple(rows))
