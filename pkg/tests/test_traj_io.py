import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_traj
from vobench.errors import (
    EmptyTrajectory,
    LengthMismatch,
    MalformedLine,
    MissingHeader,
    NonMonotonicTimestamps,
    NonRotationMatrix,
)
from vobench.traj_io import (
    SourceFormat,
    associate,
    parse_euroc_gt,
    parse_kitti,
    parse_tum,
    write_tum,
)


class TestParseTum:
    def test_comment_and_identity(self):
        traj = parse_tum("# comment\n0.0 0 0 0 0 0 0 1")
        assert len(traj) == 1
        assert traj.poses[0].t == 0.0
        assert np.array_equal(traj.poses[0].orientation, [0, 0, 0, 1])
        assert traj.source_format is SourceFormat.TUM

    def test_two_poses(self):
        traj = parse_tum("0.0 0 0 0 0 0 0 1\n1.0 1 0 0 0 0 0 1")
        assert len(traj) == 2
        assert traj.span() == 1.0
        assert np.array_equal(traj.poses[0].position, [0, 0, 0])
        assert np.array_equal(traj.poses[1].position, [1, 0, 0])

    def test_wrong_field_count(self):
        with pytest.raises(MalformedLine) as err:
            parse_tum("0.0 0 0 0 0 0 0")
        assert err.value.line_no == 1

    def test_non_numeric_field(self):
        with pytest.raises(MalformedLine) as err:
            parse_tum("# ok\n0.0 0 0 zero 0 0 0 1")
        assert err.value.line_no == 2

    def test_empty(self):
        with pytest.raises(EmptyTrajectory):
            parse_tum("# only comments\n\n")

    def test_non_monotonic(self):
        with pytest.raises(NonMonotonicTimestamps) as err:
            parse_tum("1.0 0 0 0 0 0 0 1\n0.5 0 0 0 0 0 0 1")
        assert err.value.line_no == 2

    def test_quaternion_normalized_and_canonical(self):
        traj = parse_tum("0.0 0 0 0 0 0 0 2\n1.0 0 0 0 0 0 0 -3")
        for pose in traj.poses:
            assert abs(np.linalg.norm(pose.orientation) - 1) <= 1e-6
            assert pose.orientation[3] >= 0

    def test_zero_quaternion_rejected(self):
        with pytest.raises(MalformedLine):
            parse_tum("0.0 0 0 0 0 0 0 0")


class TestParseKitti:
    def test_identity(self):
        traj = parse_kitti("1 0 0 0 0 1 0 0 0 0 1 0")
        assert len(traj) == 1
        assert traj.poses[0].t == 0.0
        assert np.array_equal(traj.poses[0].position, [0, 0, 0])
        assert np.allclose(traj.poses[0].orientation, [0, 0, 0, 1])

    def test_default_rate_timestamps(self):
        text = "1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0 0 0 0 1 0"
        traj = parse_kitti(text, default_rate_hz=10.0)
        assert traj.timestamps.tolist() == [0.0, 0.1]

    def test_wrong_field_count(self):
        with pytest.raises(MalformedLine) as err:
            parse_kitti("1 0 0 0 0 1 0 0 0 0 1")
        assert err.value.line_no == 1

    def test_times_file(self):
        text = "1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 1 1 0 0 0 0 1 5"
        # second line has a slightly non-orthonormal block within tolerance
        text = "1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0 0 0 0 1 5"
        traj = parse_kitti(text, times_source="2.5\n3.5\n")
        assert traj.timestamps.tolist() == [2.5, 3.5]
        assert np.array_equal(traj.poses[1].position, [0, 0, 5])

    def test_times_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            parse_kitti("1 0 0 0 0 1 0 0 0 0 1 0", times_source="0.0\n0.1\n")

    def test_translation_extracted_row_major(self):
        traj = parse_kitti("1 0 0 7 0 1 0 8 0 0 1 9")
        assert np.array_equal(traj.poses[0].position, [7, 8, 9])

    def test_small_denormalization_projected(self):
        # rotation block off from identity by ~3e-4 per element: within tolerance
        text = "1.0003 0 0 0 0 1 0 0 0 0 0.9997 0"
        traj = parse_kitti(text)
        assert abs(np.linalg.norm(traj.poses[0].orientation) - 1) <= 1e-6

    def test_non_rotation_rejected(self):
        with pytest.raises(NonRotationMatrix) as err:
            parse_kitti("2 0 0 0 0 1 0 0 0 0 1 0")
        assert err.value.line_no == 1

    def test_reflection_rejected(self):
        with pytest.raises(NonRotationMatrix):
            parse_kitti("-1 0 0 0 0 1 0 0 0 0 1 0")


class TestParseEuroc:
    HEADER = "#timestamp,p_x,p_y,p_z,q_w,q_x,q_y,q_z\n"

    def test_nanosecond_conversion(self):
        traj = parse_euroc_gt(self.HEADER + "1403636579763555584,0,0,0,1,0,0,0")
        assert traj.poses[0].t == pytest.approx(1403636579.763555584, abs=1e-6)
        assert np.allclose(traj.poses[0].orientation, [0, 0, 0, 1])

    def test_quaternion_reorder(self):
        traj = parse_euroc_gt(self.HEADER + "0,0,0,0,0.7071068,0.7071068,0,0")
        assert np.allclose(
            traj.poses[0].orientation, [0.7071068, 0, 0, 0.7071068], atol=1e-6
        )

    def test_missing_header(self):
        with pytest.raises(MissingHeader):
            parse_euroc_gt("0,0,0,0,1,0,0,0")

    def test_trailing_fields_ignored(self):
        row = "1000000000,1,2,3,1,0,0,0,9,9,9,9,9,9,9,9,9\n"
        traj = parse_euroc_gt(self.HEADER + row)
        assert np.array_equal(traj.poses[0].position, [1, 2, 3])

    def test_too_few_fields(self):
        with pytest.raises(MalformedLine):
            parse_euroc_gt(self.HEADER + "0,0,0,0,1,0,0")

    def test_non_monotonic(self):
        text = self.HEADER + "2000000000,0,0,0,1,0,0,0\n1000000000,0,0,0,1,0,0,0"
        with pytest.raises(NonMonotonicTimestamps):
            parse_euroc_gt(text)


def brute_force_matchings(est_t, gt_t, max_diff):
    """All one-to-one matchings within max_diff: cardinality -> min total |dt|."""
    candidates = [
        (i, j)
        for i in range(len(est_t))
        for j in range(len(gt_t))
        if abs(est_t[i] - gt_t[j]) <= max_diff
    ]
    best = {0: 0.0}
    for r in range(1, len(candidates) + 1):
        for combo in itertools.combinations(candidates, r):
            if len({i for i, _ in combo}) != r or len({j for _, j in combo}) != r:
                continue
            total = sum(abs(est_t[i] - gt_t[j]) for i, j in combo)
            if r not in best or total < best[r]:
                best[r] = total
    return best


def greedy_reference(est_t, gt_t, max_diff):
    """Quadratic re-derivation of greedy nearest-pair matching (oracle)."""
    remaining = [
        (abs(est_t[i] - gt_t[j]), i, j)
        for i in range(len(est_t))
        for j in range(len(gt_t))
        if abs(est_t[i] - gt_t[j]) <= max_diff
    ]
    used_i, used_j, matched = set(), set(), []
    while True:
        open_pairs = [c for c in remaining if c[1] not in used_i and c[2] not in used_j]
        if not open_pairs:
            break
        _, i, j = min(open_pairs)
        used_i.add(i)
        used_j.add(j)
        matched.append((i, j))
    return sorted(matched)


class TestAssociate:
    def test_one_accepted_one_rejected(self):
        # Candidate enumeration: (0.0, 0.01) dt=0.01 ok; (1.0, 1.03) dt=0.03 > 0.02.
        est = make_traj([0.0, 1.0])
        gt = make_traj([0.01, 1.03])
        pairs = associate(est, gt, max_diff=0.02)
        assert len(pairs) == 1
        assert pairs.pairs[0][0].t == 0.0
        assert pairs.pairs[0][1].t == 0.01

    def test_identical_timestamps_full_match(self):
        est = make_traj([0.0, 0.5, 1.0])
        gt = make_traj([0.0, 0.5, 1.0])
        pairs = associate(est, gt, max_diff=0.02)
        assert len(pairs) == 3
        assert all(e.t == g.t for e, g in pairs.pairs)

    def test_disjoint_ranges_empty(self):
        pairs = associate(make_traj([0.0, 0.1]), make_traj([10.0, 10.1]), 0.02)
        assert len(pairs) == 0

    def test_one_to_one(self):
        est = make_traj([0.0, 0.005, 0.01])
        gt = make_traj([0.006])
        pairs = associate(est, gt, max_diff=0.02)
        assert len(pairs) == 1  # single gt pose used at most once

    def test_ordered_by_estimate_time(self):
        est = make_traj([0.0, 1.0, 2.0])
        gt = make_traj([0.001, 0.999, 2.002])
        pairs = associate(est, gt, max_diff=0.02)
        est_times = [e.t for e, _ in pairs.pairs]
        assert est_times == sorted(est_times)

    def test_matches_greedy_reference_on_adversarial_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(150):
            ne, ng = rng.integers(1, 7), rng.integers(1, 7)
            est_t = np.sort(rng.uniform(0, 1, ne))
            gt_t = np.sort(rng.uniform(0, 1, ng))
            if len(set(est_t)) != ne or len(set(gt_t)) != ng:
                continue
            max_diff = float(rng.uniform(0.05, 0.3))
            pairs = associate(make_traj(est_t), make_traj(gt_t), max_diff)
            got = sorted(
                (list(est_t).index(e.t), list(gt_t).index(g.t))
                for e, g in pairs.pairs
            )
            assert got == greedy_reference(est_t, gt_t, max_diff)

    def test_minimal_total_dt_in_disambiguated_regime(self):
        # With jitter under 0.2*spacing and a window of 0.45*spacing, each
        # pose has at most one candidate, where greedy is exactly optimal.
        rng = np.random.default_rng(7)
        spacing = 0.1
        for _ in range(100):
            n = int(rng.integers(2, 7))
            grid = np.arange(n) * spacing
            keep_e = rng.random(n) > 0.3
            keep_g = rng.random(n) > 0.3
            est_t = grid[keep_e] + rng.uniform(-0.02, 0.02, keep_e.sum())
            gt_t = grid[keep_g] + rng.uniform(-0.02, 0.02, keep_g.sum())
            if len(est_t) == 0 or len(gt_t) == 0:
                continue
            max_diff = 0.045
            pairs = associate(make_traj(est_t), make_traj(gt_t), max_diff)
            total = sum(abs(e.t - g.t) for e, g in pairs.pairs)
            table = brute_force_matchings(est_t, gt_t, max_diff)
            assert len(pairs) == max(table)
            assert total == pytest.approx(table[len(pairs)], abs=1e-12)


finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


@st.composite
def trajectories(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    times = sorted(draw(st.sets(
        st.floats(min_value=0, max_value=1e6, allow_nan=False),
        min_size=n, max_size=n,
    )))
    poses = []
    for t in times:
        position = [draw(finite) for _ in range(3)]
        quat = np.array([draw(st.floats(-1, 1)) for _ in range(4)])
        if np.linalg.norm(quat) < 1e-3:
            quat = np.array([0.0, 0.0, 0.0, 1.0])
        poses.append((t, position, quat / np.linalg.norm(quat)))
    return poses


class TestRoundTrip:
    @settings(max_examples=60, deadline=None)
    @given(trajectories())
    def test_write_parse_round_trip(self, poses):
        traj = make_traj(
            [t for t, _, _ in poses],
            [p for _, p, _ in poses],
            [q for _, _, q in poses],
        )
        back = parse_tum(write_tum(traj))
        assert len(back) == len(traj)
        for a, b in zip(traj.poses, back.poses):
            assert b.t == pytest.approx(a.t, abs=1e-9)
            assert np.allclose(b.position, a.position, atol=1e-9)
            # quaternions equal up to sign
            assert abs(float(np.dot(a.orientation, b.orientation))) >= 1 - 1e-9

    @settings(max_examples=60, deadline=None)
    @given(trajectories())
    def test_parsed_quaternions_unit_norm(self, poses):
        traj = make_traj(
            [t for t, _, _ in poses],
            [p for _, p, _ in poses],
            [q for _, _, q in poses],
        )
        back = parse_tum(write_tum(traj))
        for pose in back.poses:
            assert abs(np.linalg.norm(pose.orientation) - 1) <= 1e-6
