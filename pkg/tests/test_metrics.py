"""Metrics and stratified splitting against hand oracles."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from handproof.errors import SingleClassDataset, SingleClassLabels, SingleClassScores
from handproof.metrics import (
    balanced_accuracy_fscore,
    eer,
    roc_auc,
    stratified_split,
    weighted_fscore,
)
from handproof.trajectory import HUMAN, SYNTHETIC, LabeledSample, Trajectory

from conftest import line_trajectory


def _sample(i, label):
    return LabeledSample(f"s{i}", line_trajectory(3), label, "test")


def _label_counts(split):
    return (
        sum(s.label == HUMAN for s in split),
        sum(s.label == SYNTHETIC for s in split),
    )


class TestStratifiedSplit:
    def test_exact_proportions_ten_ten(self):
        data = [_sample(i, HUMAN) for i in range(10)] + \
               [_sample(10 + i, SYNTHETIC) for i in range(10)]
        tr, va, te = stratified_split(data, seed=7)
        assert (len(tr), len(va), len(te)) == (14, 2, 4)
        assert _label_counts(tr) == (7, 7)
        assert _label_counts(va) == (1, 1)
        assert _label_counts(te) == (2, 2)

    def test_partition_property(self):
        data = [_sample(i, HUMAN) for i in range(13)] + \
               [_sample(100 + i, SYNTHETIC) for i in range(17)]
        tr, va, te = stratified_split(data, seed=0)
        ids = [s.id for s in tr + va + te]
        assert sorted(ids) == sorted(s.id for s in data)
        assert len(set(ids)) == len(data)

    def test_class_ratio_within_one(self):
        data = [_sample(i, HUMAN) for i in range(23)] + \
               [_sample(100 + i, SYNTHETIC) for i in range(23)]
        for split in stratified_split(data, seed=11):
            h, s = _label_counts(split)
            assert abs(h - s) <= 1

    def test_same_seed_identical(self):
        data = [_sample(i, HUMAN) for i in range(8)] + \
               [_sample(50 + i, SYNTHETIC) for i in range(8)]
        a = stratified_split(data, seed=3)
        b = stratified_split(data, seed=3)
        for sa, sb in zip(a, b):
            assert [s.id for s in sa] == [s.id for s in sb]

    def test_different_seed_differs(self):
        data = [_sample(i, HUMAN) for i in range(30)] + \
               [_sample(50 + i, SYNTHETIC) for i in range(30)]
        a = stratified_split(data, seed=3)
        b = stratified_split(data, seed=4)
        assert [s.id for s in a[0]] != [s.id for s in b[0]]

    def test_single_class_raises(self):
        with pytest.raises(SingleClassDataset):
            stratified_split([_sample(0, HUMAN), _sample(1, HUMAN)], seed=0)

    def test_bad_ratios_raise(self):
        data = [_sample(0, HUMAN), _sample(1, SYNTHETIC)]
        with pytest.raises(ValueError):
            stratified_split(data, (0.5, 0.5, 0.5), seed=0)


class TestRocAuc:
    def test_perfect_separation(self):
        assert roc_auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0

    def test_three_of_four_pairs(self):
        assert roc_auc([0.8, 0.4, 0.6, 0.2], [1, 1, 0, 0]) == 0.75

    def test_full_ties(self):
        assert roc_auc([0.5] * 6, [1, 1, 1, 0, 0, 0]) == 0.5

    def test_single_class_raises(self):
        with pytest.raises(SingleClassScores):
            roc_auc([0.1, 0.2], [1, 1])

    def test_antisymmetry_under_negation(self):
        rng = np.random.default_rng(2)
        s = rng.standard_normal(50)
        y = np.array([1] * 25 + [0] * 25)
        assert roc_auc(s, y) + roc_auc(-s, y) == pytest.approx(1.0, abs=1e-12)

    @given(st.data())
    def test_matches_brute_force_oracle(self, data):
        n = data.draw(st.integers(4, 60))
        scores = np.array(data.draw(st.lists(
            st.integers(-5, 5).map(lambda k: k / 10.0), min_size=n, max_size=n)))
        labels = np.array(data.draw(st.lists(st.integers(0, 1),
                                             min_size=n, max_size=n)))
        if labels.all() or not labels.any():
            labels[0] = 1 - labels[0]
        pos, neg = scores[labels == 1], scores[labels == 0]
        wins = (np.sum(pos[:, None] > neg[None, :])
                + 0.5 * np.sum(pos[:, None] == neg[None, :]))
        oracle = wins / (len(pos) * len(neg))
        assert abs(roc_auc(scores, labels) - oracle) < 1e-9

    def test_string_labels_accepted(self):
        got = roc_auc([0.9, 0.1], ["synthetic", "human"])
        assert got == 1.0


class TestEer:
    def test_separable_scores_zero(self):
        assert eer([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 0.0

    def test_exhaustive_sweep_example(self):
        got = eer([0.9, 0.6, 0.4, 0.7, 0.3, 0.1], [1, 1, 1, 0, 0, 0])
        assert got == pytest.approx(1 / 3, abs=1e-12)

    @given(st.data())
    def test_flip_identity_exact(self, data):
        n = data.draw(st.integers(4, 40))
        scores = np.array(data.draw(st.lists(
            st.integers(0, 20).map(lambda k: k / 20.0), min_size=n, max_size=n)))
        labels = np.array(data.draw(st.lists(st.integers(0, 1),
                                             min_size=n, max_size=n)))
        if labels.all() or not labels.any():
            labels[0] = 1 - labels[0]
        assert eer(scores, labels) == eer(1.0 - scores, 1 - labels)

    def test_auc_one_implies_eer_zero(self):
        rng = np.random.default_rng(9)
        s = np.concatenate([rng.uniform(0.6, 1.0, 30), rng.uniform(0.0, 0.4, 30)])
        y = np.array([1] * 30 + [0] * 30)
        assert roc_auc(s, y) == 1.0
        assert eer(s, y) == 0.0

    def test_complete_inversion(self):
        assert eer([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]) == 1.0

    def test_single_class_raises(self):
        with pytest.raises(SingleClassScores):
            eer([0.5, 0.6], [0, 0])


class TestBalancedAccuracyFscore:
    def test_confusion_matrix_example(self):
        pred = np.array([1] * 90 + [0] * 10 + [0] * 40 + [1] * 60)
        lab = np.array([1] * 100 + [0] * 100)
        bal_acc, f1 = balanced_accuracy_fscore(pred, lab)
        assert bal_acc == pytest.approx(0.65, abs=1e-12)
        assert f1 == pytest.approx(0.72, abs=1e-12)

    def test_perfect_predictions(self):
        lab = np.array([1, 0, 1, 0])
        assert balanced_accuracy_fscore(lab, lab) == (1.0, 1.0)

    def test_zero_f1_when_nothing_predicted_positive(self):
        _, f1 = balanced_accuracy_fscore([0, 0, 0, 0], [1, 1, 0, 0])
        assert f1 == 0.0

    def test_single_class_labels_raise(self):
        with pytest.raises(SingleClassLabels):
            balanced_accuracy_fscore([1, 0], [1, 1])

    def test_weighted_fscore_balanced_case(self):
        pred = np.array([1, 1, 0, 0])
        lab = np.array([1, 1, 0, 0])
        assert weighted_fscore(pred, lab) == 1.0

    def test_weighted_fscore_reflects_proportions(self):
        # 3 synthetic all correct, 1 human wrong: weighted F1 favors majority
        pred = np.array([1, 1, 1, 1])
        lab = np.array([1, 1, 1, 0])
        w = weighted_fscore(pred, lab)
        assert w == pytest.approx(0.75 * (2 * (3 / 4) * 1.0 / ((3 / 4) + 1.0)), abs=1e-12)
