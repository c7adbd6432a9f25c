"""Decision trees over categorical predictors, with five-fold
cross-validated model selection and DOT export.

Splits are binary equality tests ``predictor == value`` scored by Gini
impurity decrease. Impurities are compared in exact rational arithmetic
so that ties resolve by schema order, never by floating-point noise,
and repeated runs export byte-identical trees.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

from . import catalog as cat
from .errors import EmptyDataSet, EmptyLabelSet, MissingPredictor, TooFewRows

Row = tuple[Mapping[str, str], str]


@dataclass(frozen=True)
class FitParams:
    max_depth: int = 5
    min_leaf: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_depth < 1 or self.min_leaf < 1:
            raise ValueError("max_depth and min_leaf must be >= 1")


@dataclass(frozen=True)
class DataSet:
    """Rows of (predictor values, label) under a fixed categorical schema.

    ``schema`` lists predictors with their value enumerations in a fixed
    order; that order (and the label order) breaks all ties during
    fitting.
    """

    schema: tuple[tuple[str, tuple[str, ...]], ...]
    labels: tuple[str, ...]
    rows: tuple[Row, ...]

    def __post_init__(self):
        allowed = {name: set(values) for name, values in self.schema}
        label_set = set(self.labels)
        for values, label in self.rows:
            for name in allowed:
                if name not in values:
                    raise MissingPredictor(name)
                if values[name] not in allowed[name]:
                    raise ValueError(
                        f"value {values[name]!r} not in enumeration of {name!r}"
                    )
            if label not in label_set:
                raise ValueError(f"label {label!r} not in label enumeration")


@dataclass(frozen=True)
class Leaf:
    label: str
    counts: tuple[tuple[str, int], ...]

    @property
    def total(self) -> int:
        return sum(c for _, c in self.counts)


@dataclass(frozen=True)
class Split:
    predictor: str
    value: str
    left: "TreeNode"  # rows where predictor == value
    right: "TreeNode"  # all other rows


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True)
class CandidateSplit:
    predictor: str
    value: str
    gain: Fraction


def _gini_exact(counts: Counter, n: int) -> Fraction:
    return Fraction(1) - sum(Fraction(c, n) ** 2 for c in counts.values())


def gini(labels) -> float:
    """Gini impurity 1 - sum(p_c^2) of a label multiset."""
    counts = Counter(labels)
    n = sum(counts.values())
    if n == 0:
        raise EmptyLabelSet("gini of an empty label set")
    return float(_gini_exact(counts, n))


def best_split(rows, schema) -> CandidateSplit | None:
    """Equality split with the largest exact Gini decrease, or None.

    Ties break by predictor order in the schema, then by value
    enumeration order. Returns None when no split strictly decreases
    impurity.
    """
    rows = list(rows)
    n = len(rows)
    if n == 0:
        raise EmptyDataSet("cannot split zero rows")
    parent_counts = Counter(label for _, label in rows)
    parent = _gini_exact(parent_counts, n)

    best: CandidateSplit | None = None
    for predictor, values in schema:
        for value in values:
            left_counts = Counter(
                label for row, label in rows if row[predictor] == value
            )
            n_left = sum(left_counts.values())
            n_right = n - n_left
            if n_left == 0 or n_right == 0:
                continue
            right_counts = parent_counts - left_counts
            weighted = (
                Fraction(n_left, n) * _gini_exact(left_counts, n_left)
                + Fraction(n_right, n) * _gini_exact(right_counts, n_right)
            )
            gain = parent - weighted
            if gain > 0 and (best is None or gain > best.gain):
                best = CandidateSplit(predictor=predictor, value=value, gain=gain)
    return best


def _majority(counts: Counter, label_order) -> str:
    best_label = None
    best_count = -1
    for label in label_order:
        if counts.get(label, 0) > best_count:
            best_count = counts[label]
            best_label = label
    return best_label


def _make_leaf(rows, label_order) -> Leaf:
    counts = Counter(label for _, label in rows)
    ordered = tuple((lab, counts[lab]) for lab in label_order if counts.get(lab, 0) > 0)
    return Leaf(label=_majority(counts, label_order), counts=ordered)


def _first_separating_split(rows, schema):
    for predictor, values in schema:
        for value in values:
            n_left = sum(1 for row, _ in rows if row[predictor] == value)
            if 0 < n_left < len(rows):
                return predictor, value
    return None


def fit(data: DataSet, params: FitParams = FitParams()) -> TreeNode:
    """Recursive partitioning with majority leaves.

    Stops on the depth limit, on nodes of at most ``min_leaf`` rows, and
    on pure nodes. When no split strictly decreases impurity but the
    node is impure (XOR-like labelings have no first-order gain), the
    first value split that separates the rows is taken instead, so
    consistent data always fits exactly within the depth budget.
    """
    if not data.rows:
        raise EmptyDataSet("cannot fit an empty dataset")

    def build(rows, depth):
        counts = Counter(label for _, label in rows)
        if (
            depth >= params.max_depth
            or len(rows) <= params.min_leaf
            or len(counts) == 1
        ):
            return _make_leaf(rows, data.labels)
        cand = best_split(rows, data.schema)
        if cand is not None:
            predictor, value = cand.predictor, cand.value
        else:
            fallback = _first_separating_split(rows, data.schema)
            if fallback is None:
                return _make_leaf(rows, data.labels)
            predictor, value = fallback
        left_rows = [r for r in rows if r[0][predictor] == value]
        right_rows = [r for r in rows if r[0][predictor] != value]
        return Split(
            predictor=predictor,
            value=value,
            left=build(left_rows, depth + 1),
            right=build(right_rows, depth + 1),
        )

    return build(list(data.rows), 0)


def predict(tree: TreeNode, row: Mapping[str, str]) -> str:
    """Route a row to a leaf and return its label."""
    node = tree
    while isinstance(node, Split):
        if node.predictor not in row:
            raise MissingPredictor(node.predictor)
        node = node.left if row[node.predictor] == node.value else node.right
    return node.label


def accuracy(tree: TreeNode, rows) -> float:
    rows = list(rows)
    if not rows:
        raise EmptyDataSet("accuracy over zero rows")
    hits = sum(1 for values, label in rows if predict(tree, values) == label)
    return hits / len(rows)


def cross_validate_fit(
    data: DataSet,
    folds: int = 5,
    params: FitParams = FitParams(),
) -> tuple[TreeNode, float]:
    """Five-fold (by default) cross-validated model selection.

    Rows are shuffled by the seed and dealt round-robin into disjoint
    folds. Each fold's model trains on the other folds and validates on
    its own; the model with the best validation accuracy (ties: lowest
    fold index) is returned along with its accuracy re-evaluated on the
    whole pool.
    """
    n = len(data.rows)
    if n < folds:
        raise TooFewRows(f"{n} rows cannot fill {folds} folds")
    rng = random.Random(params.rng_seed)
    order = list(range(n))
    rng.shuffle(order)

    fold_rows: list[list[Row]] = [[] for _ in range(folds)]
    for position, row_index in enumerate(order):
        fold_rows[position % folds].append(data.rows[row_index])

    best_tree = None
    best_acc = -1.0
    for f in range(folds):
        train: list[Row] = []
        for g in range(folds):
            if g != f:
                train.extend(fold_rows[g])
        tree = fit(
            DataSet(schema=data.schema, labels=data.labels, rows=tuple(train)),
            params,
        )
        acc = accuracy(tree, fold_rows[f])
        if acc > best_acc:
            best_acc = acc
            best_tree = tree
    return best_tree, accuracy(best_tree, data.rows)


def export_dot(tree: TreeNode) -> str:
    """Deterministic DOT rendering: pre-order ids, yes/no edge labels."""
    lines = ["digraph decision_tree {", "  node [shape=box];"]
    edges: list[str] = []
    counter = 0

    def emit(node) -> int:
        nonlocal counter
        node_id = counter
        counter += 1
        if isinstance(node, Leaf):
            label = f"{node.label} ({node.total})"
            lines.append(f'  n{node_id} [label="{_escape(label)}"];')
        else:
            label = f"{node.predictor} = {node.value}"
            lines.append(f'  n{node_id} [label="{_escape(label)}"];')
            left_id = emit(node.left)
            right_id = emit(node.right)
            edges.append(f'  n{node_id} -> n{left_id} [label="yes"];')
            edges.append(f'  n{node_id} -> n{right_id} [label="no"];')
        return node_id

    emit(tree)
    return "\n".join(lines + edges + ["}"]) + "\n"


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


#: Predictor schema of the sequence catalog, in taxonomy order.
CATALOG_SCHEMA = (
    ("scene", tuple(m.value for m in cat.Scene)),
    ("duration", tuple(m.value for m in cat.DurationClass)),
    ("motion_dyn", tuple(m.value for m in cat.Level)),
    ("environ_dyn", tuple(m.value for m in cat.Level)),
    ("revisit_freq", tuple(m.value for m in cat.Level)),
)

DIFFICULTY_LABELS = tuple(m.value for m in cat.Difficulty)


def dataset_from_catalog(records, include_revisit: bool = True) -> DataSet:
    """Catalog rows as a dataset: properties as predictors, difficulty as label.

    Unlabeled records are skipped. ``include_revisit=False`` drops the
    revisit-frequency predictor (used when labels come from algorithms
    whose run count cannot support it).
    """
    schema = tuple(
        (name, values)
        for name, values in CATALOG_SCHEMA
        if include_revisit or name != "revisit_freq"
    )
    rows = []
    for rec in records:
        if rec.difficulty is None:
            continue
        values = {
            "scene": rec.scene.value,
            "duration": rec.duration.value,
            "motion_dyn": rec.motion_dyn.value,
            "environ_dyn": rec.environ_dyn.value,
            "revisit_freq": rec.revisit_freq.value,
        }
        if not include_revisit:
            del values["revisit_freq"]
        rows.append((values, rec.difficulty.value))
    if not rows:
        raise EmptyDataSet("no labeled records in catalog")
    return DataSet(schema=schema, labels=DIFFICULTY_LABELS, rows=tuple(rows))
