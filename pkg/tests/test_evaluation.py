import numpy as np
import pytest

from upliftrank.data import Partition, UpliftDataset, rank_by_scores
from upliftrank.errors import DegenerateGroupError, UnsupportedSpecError
from upliftrank.evaluation import (CountMode, CurveKind, ValueFunctionSpec,
                                   auuc, auuc_at_cutoff, build_curve,
                                   equivalence_check_qini_uplift_separate,
                                   paired_t_test, random_baseline,
                                   spec_from_label, value_at)

from conftest import random_dataset

JOINT_REL = spec_from_label("joint-rel")
SEP_REL = spec_from_label("uplift-sep-rel")
SEP_ABS_UPLIFT = spec_from_label("uplift-sep-abs")
SEP_ABS_QINI = spec_from_label("qini-sep-abs")
JOINT_ABS_QINI = spec_from_label("qini-joint-abs")
JOINT_ABS_UPLIFT = spec_from_label("uplift-joint-abs")


class TestSpec:
    def test_blank_cell_rejected(self):
        with pytest.raises(UnsupportedSpecError):
            ValueFunctionSpec(CurveKind.QINI, Partition.SEPARATE,
                              CountMode.RELATIVE)

    def test_joint_relative_aliases(self):
        qini = ValueFunctionSpec(CurveKind.QINI, Partition.JOINT,
                                 CountMode.RELATIVE)
        uplift = ValueFunctionSpec(CurveKind.UPLIFT, Partition.JOINT,
                                   CountMode.RELATIVE)
        assert qini.label == uplift.label == "joint-rel"

    def test_unknown_label(self):
        with pytest.raises(UnsupportedSpecError):
            spec_from_label("qini-sep-rel")


class TestValueAt:
    def test_joint_relative_values(self, worked_example_joint):
        assert value_at(worked_example_joint, JOINT_REL, 2) == \
            pytest.approx(1 / 3)
        assert value_at(worked_example_joint, JOINT_REL, 3) == \
            pytest.approx(-2 / 3)

    def test_separate_absolute_full_depth(self, worked_example_separate):
        # R(T,3) - R(C,1) = 2 - 1
        assert value_at(worked_example_separate, SEP_ABS_UPLIFT, 1.0) == \
            pytest.approx(1.0)

    def test_balanced_null_is_zero_at_full_depth(self):
        # equal response scaling in both groups cancels under relative count
        y = np.array([1, 0, 1, 0, 1, 0, 1, 0])
        t = np.array([1, 1, 1, 1, 0, 0, 0, 0])
        ds = UpliftDataset(np.zeros((8, 1)), y, t)
        ranked = rank_by_scores(ds, np.arange(8.0)[::-1], Partition.JOINT)
        assert value_at(ranked, JOINT_REL, 8) == pytest.approx(0.0)

    def test_partition_mismatch(self, worked_example_joint):
        with pytest.raises(ValueError):
            value_at(worked_example_joint, SEP_REL, 0.5)

    def test_degenerate_control_group(self):
        ds = UpliftDataset(np.zeros((3, 1)), [1, 0, 1], [1, 1, 1])
        ranked = rank_by_scores(ds, [3.0, 2.0, 1.0], Partition.JOINT)
        with pytest.raises(DegenerateGroupError):
            value_at(ranked, JOINT_REL, 2)


class TestCurve:
    def test_worked_example_curve(self, worked_example_joint):
        curve = build_curve(worked_example_joint, JOINT_REL)
        assert np.allclose(curve.values, [0.0, 1 / 3, -2 / 3, -1 / 3])
        assert np.allclose(curve.x, [0.25, 0.5, 0.75, 1.0])

    def test_single_instance(self):
        ds = UpliftDataset(np.zeros((1, 1)), [1], [1])
        ranked = rank_by_scores(ds, [1.0], Partition.JOINT)
        curve = build_curve(ranked, JOINT_ABS_QINI)
        assert len(curve) == 1

    def test_zero_responders_flat(self):
        rng = np.random.default_rng(0)
        ds = UpliftDataset(np.zeros((20, 1)), np.zeros(20),
                           rng.integers(0, 2, 20))
        ds.t[0] = 1
        ds.t[1] = 0
        ranked = rank_by_scores(ds, rng.normal(size=20), Partition.JOINT)
        assert np.allclose(build_curve(ranked, JOINT_REL).values, 0.0)

    def test_full_depth_value_order_invariant(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            ds, scores = random_dataset(rng)
            r1 = rank_by_scores(ds, scores, Partition.JOINT)
            r2 = rank_by_scores(ds, rng.normal(size=len(ds)),
                                Partition.JOINT)
            for spec in (JOINT_REL, JOINT_ABS_QINI, JOINT_ABS_UPLIFT):
                v1 = build_curve(r1, spec).values[-1]
                v2 = build_curve(r2, spec).values[-1]
                assert v1 == pytest.approx(v2)

    def test_full_depth_equals_overall_uplift(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            ds, scores = random_dataset(rng)
            ranked = rank_by_scores(ds, scores, Partition.JOINT)
            expected = (ds.y[ds.t == 1].mean() - ds.y[ds.t == 0].mean())
            assert value_at(ranked, JOINT_REL, len(ds)) == \
                pytest.approx(expected)

    def test_zero_denominator_joint_absolute_finite(self):
        ds = UpliftDataset(np.zeros((4, 1)), [1, 1, 1, 1], [1, 1, 0, 0])
        ranked = rank_by_scores(ds, [4.0, 3.0, 2.0, 1.0], Partition.JOINT)
        qini = build_curve(ranked, JOINT_ABS_QINI).values
        uplift = build_curve(ranked, JOINT_ABS_UPLIFT).values
        assert np.isfinite(qini).all() and np.isfinite(uplift).all()
        assert qini[0] == pytest.approx(1.0)   # control term defined as 0
        assert uplift[0] == pytest.approx(1.0)


class TestAuuc:
    def test_worked_example(self, worked_example_joint):
        result = auuc(worked_example_joint, JOINT_REL)
        assert result.auuc == pytest.approx(-1 / 6, abs=1e-12)
        assert result.auuc_raw == pytest.approx(-2 / 3, abs=1e-12)
        assert result.n_points == 4

    def test_all_zero_responses(self):
        ds = UpliftDataset(np.zeros((6, 1)), np.zeros(6),
                           [1, 0, 1, 0, 1, 0])
        ranked = rank_by_scores(ds, np.arange(6.0), Partition.JOINT)
        assert auuc(ranked, JOINT_REL).auuc == 0.0

    def test_separate_uses_interval_grid(self, worked_example_separate):
        result = auuc(worked_example_separate, SEP_REL)
        assert result.n_points == 100
        coarse = auuc(worked_example_separate, SEP_REL, intervals=10)
        assert coarse.n_points == 10

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            ds, scores = random_dataset(rng)
            r1 = rank_by_scores(ds, scores, Partition.JOINT)
            r2 = rank_by_scores(ds, np.exp(scores) * 3 + 1, Partition.JOINT)
            assert auuc(r1, JOINT_REL).auuc == \
                pytest.approx(auuc(r2, JOINT_REL).auuc, abs=1e-12)

    def test_proportionality_qini_rel(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            ds, scores = random_dataset(rng)
            ranked = rank_by_scores(ds, scores, Partition.SEPARATE)
            q = auuc(ranked, SEP_ABS_QINI).auuc
            u = auuc(ranked, SEP_REL).auuc
            assert q == pytest.approx(ds.n_treated * u, abs=1e-9)


class TestCutoff:
    def test_full_fraction_equals_auuc(self, worked_example_joint):
        assert auuc_at_cutoff(worked_example_joint, JOINT_REL, 1.0) == \
            pytest.approx(auuc(worked_example_joint, JOINT_REL).auuc)

    def test_half_fraction(self, worked_example_joint):
        assert auuc_at_cutoff(worked_example_joint, JOINT_REL, 0.5) == \
            pytest.approx((0.0 + 1 / 3) / 4)

    def test_small_fraction_single_term(self, worked_example_joint):
        assert auuc_at_cutoff(worked_example_joint, JOINT_REL, 1e-9) == \
            pytest.approx(0.0 / 4)

    def test_separate_grid_truncation(self, worked_example_separate):
        # rounded group cutoffs make V(p) = 0 below p = 0.5 and
        # 1/3 - 1 from there on; 26 of 100 grid points contribute
        assert auuc_at_cutoff(worked_example_separate, SEP_REL, 0.75) == \
            pytest.approx(-26 * (2 / 3) / 100)
        assert auuc_at_cutoff(worked_example_separate, SEP_REL, 0.25) == \
            pytest.approx(0.0)


class TestRandomBaseline:
    def test_chord_endpoints(self, worked_example_joint):
        base = random_baseline(worked_example_joint, JOINT_REL)
        assert base.values[-1] == pytest.approx(-1 / 3)
        assert base.values[1] == pytest.approx(-1 / 6)  # x = 0.5

    def test_zero_uplift_flat(self):
        ds = UpliftDataset(np.zeros((8, 1)), [1, 0, 1, 0, 1, 0, 1, 0],
                           [1, 1, 1, 1, 0, 0, 0, 0])
        ranked = rank_by_scores(ds, np.arange(8.0), Partition.JOINT)
        base = random_baseline(ranked, JOINT_REL)
        assert np.allclose(base.values, 0.0)

    def test_shares_endpoint_with_curve(self):
        rng = np.random.default_rng(5)
        ds, scores = random_dataset(rng)
        ranked = rank_by_scores(ds, scores, Partition.JOINT)
        curve = build_curve(ranked, JOINT_REL)
        base = random_baseline(ranked, JOINT_REL)
        assert base.values[-1] == pytest.approx(curve.values[-1])


class TestPairedTTest:
    def test_identical_samples(self):
        r = paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert r.p_value == 1.0 and not r.significant

    def test_large_shift_tiny_variance(self):
        rng = np.random.default_rng(6)
        b = rng.normal(size=8)
        a = b + 10 + rng.normal(scale=1e-6, size=8)
        r = paired_t_test(a, b)
        assert r.p_value < 1e-3 and r.significant

    def test_hand_computed_case(self):
        # d = (-0.1, -0.1, 0.1): t = -0.5, two-sided p = 2/3 at 2 dof
        r = paired_t_test([1.0, 2.0, 3.0], [1.1, 2.1, 2.9])
        assert r.statistic == pytest.approx(-0.5, abs=1e-12)
        assert r.p_value == pytest.approx(2 / 3, abs=1e-12)
        assert not r.significant

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=10)
        b = rng.normal(size=10)
        assert paired_t_test(a, b).p_value == \
            pytest.approx(paired_t_test(b, a).p_value)

    def test_argument_errors(self):
        with pytest.raises(ValueError):
            paired_t_test([1.0], [2.0])
        with pytest.raises(ValueError):
            paired_t_test([1.0, 2.0], [1.0, 2.0, 3.0])


class TestEquivalence:
    def test_worked_example(self, worked_example_separate):
        assert equivalence_check_qini_uplift_separate(
            worked_example_separate) <= 1e-9

    def test_random_datasets(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            ds, scores = random_dataset(rng)
            ranked = rank_by_scores(ds, scores, Partition.SEPARATE)
            assert equivalence_check_qini_uplift_separate(ranked) <= 1e-9

    def test_balanced_groups(self):
        rng = np.random.default_rng(9)
        y = rng.integers(0, 2, 20)
        t = np.repeat([1, 0], 10)
        ds = UpliftDataset(np.zeros((20, 1)), y, t)
        ranked = rank_by_scores(ds, rng.normal(size=20), Partition.SEPARATE)
        assert equivalence_check_qini_uplift_separate(ranked) <= 1e-9
