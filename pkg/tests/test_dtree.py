import itertools
from collections import Counter
from fractions import Fraction

import pytest

from vobench.dtree import (
    DataSet,
    FitParams,
    Leaf,
    Split,
    accuracy,
    best_split,
    cross_validate_fit,
    dataset_from_catalog,
    export_dot,
    fit,
    gini,
    predict,
)
from vobench.errors import (
    EmptyDataSet,
    EmptyLabelSet,
    MissingPredictor,
    TooFewRows,
)
from vobench.refdata import load_table1


def exact_gini(labels) -> Fraction:
    counts = Counter(labels)
    n = sum(counts.values())
    return Fraction(1) - sum(Fraction(c, n) ** 2 for c in counts.values())


def exhaustive_best_split(rows, schema):
    """Independent enumeration of every (predictor, value) split, exact arithmetic.

    Returns (predictor, value, gain) with ties broken by schema order then
    value order, or None when no split strictly decreases impurity.
    """
    n = len(rows)
    parent = exact_gini([label for _, label in rows])
    best = None
    for predictor, values in schema:
        for value in values:
            left = [label for r, label in rows if r[predictor] == value]
            right = [label for r, label in rows if r[predictor] != value]
            if not left or not right:
                continue
            child = (
                Fraction(len(left), n) * exact_gini(left)
                + Fraction(len(right), n) * exact_gini(right)
            )
            gain = parent - child
            if gain > 0 and (best is None or gain > best[2]):
                best = (predictor, value, gain)
    return best


LEVELS = ("Low", "Medium", "High")
DIFFICULTY = ("Easy", "Medium", "Difficult")


def motion_rows():
    """motion_dyn == High exactly on the Difficult rows; scene constant."""
    return (
        ({"scene": "Indoor", "motion_dyn": "High"}, "Difficult"),
        ({"scene": "Indoor", "motion_dyn": "High"}, "Difficult"),
        ({"scene": "Indoor", "motion_dyn": "Low"}, "Easy"),
        ({"scene": "Indoor", "motion_dyn": "Medium"}, "Easy"),
    )


MOTION_SCHEMA = (("scene", ("Indoor", "Outdoor")), ("motion_dyn", LEVELS))


def motion_dataset():
    return DataSet(schema=MOTION_SCHEMA, labels=DIFFICULTY, rows=motion_rows())


class TestGini:
    def test_pure(self):
        assert gini(["Easy", "Easy", "Easy"]) == 0.0

    def test_two_thirds_one_third(self):
        expected = 1 - ((Fraction(2, 3)) ** 2 + (Fraction(1, 3)) ** 2)
        assert expected == Fraction(4, 9)
        assert gini(["Easy", "Easy", "Difficult"]) == pytest.approx(4 / 9, abs=1e-12)

    def test_empty(self):
        with pytest.raises(EmptyLabelSet):
            gini([])

    def test_range(self):
        assert 0 <= gini(["a", "b", "c", "d"]) < 1


class TestBestSplit:
    def test_motion_example_matches_oracle(self):
        rows = motion_rows()
        oracle = exhaustive_best_split(rows, MOTION_SCHEMA)
        assert oracle[:2] == ("motion_dyn", "High")
        chosen = best_split(rows, MOTION_SCHEMA)
        assert (chosen.predictor, chosen.value, chosen.gain) == oracle

    def test_pure_rows_give_none(self):
        rows = tuple(({"scene": s, "motion_dyn": "Low"}, "Easy")
                     for s in ("Indoor", "Outdoor", "Indoor"))
        assert best_split(rows, MOTION_SCHEMA) is None

    def test_schema_order_breaks_ties(self):
        # two predictors carry identical information
        rows = (
            ({"a": "X", "b": "P"}, "L1"),
            ({"a": "X", "b": "P"}, "L1"),
            ({"a": "Y", "b": "Q"}, "L2"),
            ({"a": "Y", "b": "Q"}, "L2"),
        )
        schema = (("a", ("X", "Y")), ("b", ("P", "Q")))
        chosen = best_split(rows, schema)
        assert (chosen.predictor, chosen.value) == ("a", "X")
        schema_rev = (("b", ("P", "Q")), ("a", ("X", "Y")))
        chosen = best_split(rows, schema_rev)
        assert (chosen.predictor, chosen.value) == ("b", "P")

    def test_matches_oracle_on_random_instances(self, rng):
        schema = (("p0", ("a", "b")), ("p1", ("a", "b", "c")), ("p2", LEVELS))
        labels = ("L0", "L1", "L2")
        for _ in range(200):
            n = int(rng.integers(1, 21))
            rows = tuple(
                (
                    {name: values[rng.integers(len(values))] for name, values in schema},
                    labels[rng.integers(3)],
                )
                for _ in range(n)
            )
            oracle = exhaustive_best_split(rows, schema)
            chosen = best_split(rows, schema)
            if oracle is None:
                assert chosen is None
            else:
                assert (chosen.predictor, chosen.value, chosen.gain) == oracle


def all_depth1_trees(rows, schema, labels):
    """Every tree of depth <= 1 with majority leaves (oracle for fit)."""
    def majority(subset):
        counts = Counter(label for _, label in subset)
        return max(labels, key=lambda lab: (counts.get(lab, 0), -labels.index(lab)))

    def acc(tree_fn):
        return sum(1 for r, lab in rows if tree_fn(r) == lab) / len(rows)

    trees = [("leaf", None, acc(lambda r: majority(rows)))]
    for predictor, values in schema:
        for value in values:
            left = [rw for rw in rows if rw[0][predictor] == value]
            right = [rw for rw in rows if rw[0][predictor] != value]
            if not left or not right:
                continue
            yes_label, no_label = majority(left), majority(right)
            trees.append((
                predictor, value,
                acc(lambda r, p=predictor, v=value, yl=yes_label, nl=no_label:
                    yl if r[p] == v else nl),
            ))
    return trees


class TestFit:
    def test_single_label_gives_leaf(self):
        rows = tuple(({"scene": "Indoor", "motion_dyn": "Low"}, "Easy") for _ in range(3))
        tree = fit(DataSet(schema=MOTION_SCHEMA, labels=DIFFICULTY, rows=rows))
        assert isinstance(tree, Leaf)
        assert tree.label == "Easy"
        assert tree.total == 3

    def test_motion_example_depth_one_perfect(self):
        data = motion_dataset()
        # oracle: among all depth<=1 trees, only the motion_dyn=High split is perfect
        perfect = [t for t in all_depth1_trees(data.rows, data.schema, data.labels)
                   if t[2] == 1.0]
        assert perfect == [("motion_dyn", "High", 1.0)]
        tree = fit(data)
        assert isinstance(tree, Split)
        assert (tree.predictor, tree.value) == ("motion_dyn", "High")
        assert isinstance(tree.left, Leaf) and isinstance(tree.right, Leaf)
        assert accuracy(tree, data.rows) == 1.0

    def test_conflicting_duplicate_rows(self):
        rows = (
            ({"scene": "Indoor", "motion_dyn": "Low"}, "Easy"),
            ({"scene": "Indoor", "motion_dyn": "Low"}, "Difficult"),
        )
        data = DataSet(schema=MOTION_SCHEMA, labels=DIFFICULTY, rows=rows)
        tree = fit(data)
        assert isinstance(tree, Leaf)
        assert tree.label == "Easy"  # majority tie broken by label order
        assert accuracy(tree, rows) == 0.5

    def test_empty(self):
        with pytest.raises(EmptyDataSet):
            fit(DataSet(schema=MOTION_SCHEMA, labels=DIFFICULTY, rows=()))

    def test_max_depth_limits_tree(self):
        data = motion_dataset()
        tree = fit(data, FitParams(max_depth=1))
        assert isinstance(tree, Split)
        assert isinstance(tree.left, Leaf) and isinstance(tree.right, Leaf)

    def test_min_leaf_stops_splitting(self):
        data = motion_dataset()
        tree = fit(data, FitParams(min_leaf=4))
        assert isinstance(tree, Leaf)

    def test_xor_labeling_still_fits_exactly(self):
        # no single split has first-order gain; the fallback separating
        # split must still reach a consistent partition
        rows = (
            ({"a": "X", "b": "P"}, "L1"),
            ({"a": "X", "b": "Q"}, "L2"),
            ({"a": "Y", "b": "P"}, "L2"),
            ({"a": "Y", "b": "Q"}, "L1"),
        )
        schema = (("a", ("X", "Y")), ("b", ("P", "Q")))
        data = DataSet(schema=schema, labels=("L1", "L2"), rows=rows)
        assert best_split(rows, schema) is None
        tree = fit(data, FitParams(max_depth=4))
        assert accuracy(tree, rows) == 1.0

    def test_consistent_data_fits_exactly(self, rng):
        schema = (("p0", ("a", "b")), ("p1", ("a", "b", "c")), ("p2", LEVELS))
        depth_budget = sum(len(v) for _, v in schema)
        labels = ("L0", "L1")
        cells = list(itertools.product(*(v for _, v in schema)))
        for _ in range(50):
            chosen = [cells[i] for i in rng.permutation(len(cells))[: rng.integers(1, 13)]]
            rows = tuple(
                (dict(zip([n for n, _ in schema], cell)), labels[rng.integers(2)])
                for cell in chosen
            )
            data = DataSet(schema=schema, labels=labels, rows=rows)
            tree = fit(data, FitParams(max_depth=depth_budget))
            assert accuracy(tree, data.rows) == 1.0

    def test_leaf_totals_sum_to_row_count(self):
        data = motion_dataset()
        tree = fit(data)

        def leaf_total(node):
            if isinstance(node, Leaf):
                return node.total
            return leaf_total(node.left) + leaf_total(node.right)

        assert leaf_total(tree) == len(data.rows)


class TestPredict:
    def test_leaf_only(self):
        leaf = Leaf(label="Easy", counts=(("Easy", 3),))
        assert predict(leaf, {}) == "Easy"
        assert predict(leaf, {"anything": "x"}) == "Easy"

    def test_routes_through_example_tree(self):
        tree = fit(motion_dataset())
        row = {"scene": "Indoor", "motion_dyn": "High"}
        assert predict(tree, row) == "Difficult"
        assert predict(tree, {"scene": "Indoor", "motion_dyn": "Low"}) == "Easy"

    def test_missing_predictor(self):
        tree = fit(motion_dataset())
        with pytest.raises(MissingPredictor):
            predict(tree, {"scene": "Indoor"})


def relation_dataset():
    """Label fully determined by p0; ten rows."""
    rows = []
    for i in range(10):
        value = "a" if i % 2 == 0 else "b"
        rows.append((
            {"p0": value, "p1": ("x", "y")[i % 2 == 0]},
            "Easy" if value == "a" else "Difficult",
        ))
    return DataSet(
        schema=(("p0", ("a", "b")), ("p1", ("x", "y"))),
        labels=("Easy", "Difficult"),
        rows=tuple(rows),
    )


class TestCrossValidate:
    def test_deterministic_relation_full_pool_accuracy(self):
        data = relation_dataset()
        tree, acc = cross_validate_fit(data, folds=5, params=FitParams(rng_seed=42))
        assert acc == 1.0

    def test_too_few_rows(self):
        data = DataSet(
            schema=(("p0", ("a", "b")),),
            labels=("Easy",),
            rows=tuple(({"p0": "a"}, "Easy") for _ in range(3)),
        )
        with pytest.raises(TooFewRows):
            cross_validate_fit(data, folds=5)

    def test_byte_identical_across_invocations(self):
        data = dataset_from_catalog(load_table1())
        params = FitParams(rng_seed=7)
        tree1, acc1 = cross_validate_fit(data, folds=5, params=params)
        tree2, acc2 = cross_validate_fit(data, folds=5, params=params)
        assert acc1 == acc2
        assert export_dot(tree1) == export_dot(tree2)

    def test_seed_changes_folds(self):
        data = dataset_from_catalog(load_table1())
        results = {
            export_dot(cross_validate_fit(data, params=FitParams(rng_seed=s))[0])
            for s in range(8)
        }
        assert len(results) >= 1  # deterministic per seed; may coincide across seeds


class TestExportDot:
    def test_single_leaf(self):
        rows = tuple(({"scene": "Indoor", "motion_dyn": "Low"}, "Easy") for _ in range(3))
        tree = fit(DataSet(schema=MOTION_SCHEMA, labels=DIFFICULTY, rows=rows))
        dot = export_dot(tree)
        assert 'label="Easy (3)"' in dot
        assert dot.count("->") == 0
        assert dot.startswith("digraph")
        assert dot.rstrip().endswith("}")

    def test_depth_one_structure(self):
        tree = fit(motion_dataset())
        dot = export_dot(tree)
        node_lines = [l for l in dot.splitlines() if "[label=" in l and "->" not in l]
        edge_lines = [l for l in dot.splitlines() if "->" in l]
        assert len(node_lines) == 3
        assert len(edge_lines) == 2
        assert 'label="yes"' in dot and 'label="no"' in dot
        assert 'label="motion_dyn = High"' in dot

    def test_stable_across_calls(self):
        tree = fit(motion_dataset())
        assert export_dot(tree) == export_dot(tree)


class TestDataSetValidation:
    def test_missing_predictor_rejected(self):
        with pytest.raises(MissingPredictor):
            DataSet(schema=MOTION_SCHEMA, labels=DIFFICULTY,
                    rows=(({"scene": "Indoor"}, "Easy"),))

    def test_value_outside_enumeration_rejected(self):
        with pytest.raises(ValueError):
            DataSet(schema=MOTION_SCHEMA, labels=DIFFICULTY,
                    rows=(({"scene": "Space", "motion_dyn": "Low"}, "Easy"),))

    def test_label_outside_enumeration_rejected(self):
        with pytest.raises(ValueError):
            DataSet(schema=MOTION_SCHEMA, labels=DIFFICULTY,
                    rows=(({"scene": "Indoor", "motion_dyn": "Low"}, "Trivial"),))


class TestCatalogDataset:
    def test_bundled_catalog_dataset(self):
        data = dataset_from_catalog(load_table1())
        assert len(data.rows) == 12
        assert [name for name, _ in data.schema] == [
            "scene", "duration", "motion_dyn", "environ_dyn", "revisit_freq",
        ]

    def test_revisit_excluded(self):
        data = dataset_from_catalog(load_table1(), include_revisit=False)
        assert all(name != "revisit_freq" for name, _ in data.schema)
        assert all("revisit_freq" not in row for row, _ in data.rows)
