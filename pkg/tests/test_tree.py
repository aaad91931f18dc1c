"""Unit tests for the incremental Hoeffding tree."""

import math

import numpy as np
import pytest

from driftbench.tree import HoeffdingTreeClassifier, hoeffding_bound


def test_hoeffding_bound_oracle():
    # independent recomputation of sqrt(R^2 ln(1/delta) / 2n)
    expected = math.sqrt(1.0 * math.log(1e7) / 2000.0)
    assert abs(hoeffding_bound(1.0, 1e-7, 1000) - expected) < 1e-12
    assert abs(hoeffding_bound(1.0, 1e-7, 1000) - 0.089772) < 1e-6


def test_hoeffding_bound_quadruple_n_halves_exactly():
    for n in (1, 10, 1000):
        assert hoeffding_bound(2.0, 1e-7, 4 * n) == hoeffding_bound(2.0, 1e-7, n) / 2


def test_hoeffding_bound_validation():
    with pytest.raises(ValueError):
        hoeffding_bound(1.0, 1e-7, 0)
    with pytest.raises(ValueError):
        hoeffding_bound(1.0, 0.0, 10)
    with pytest.raises(ValueError):
        hoeffding_bound(0.0, 1e-7, 10)


def test_cold_start_predicts_label_zero():
    tree = HoeffdingTreeClassifier(n_features=3, n_classes=4)
    assert tree.predict(np.zeros(3)) == 0


def test_majority_vote_before_any_split():
    tree = HoeffdingTreeClassifier(n_features=1, n_classes=2)
    for _ in range(5):
        tree.partial_fit([0.0], 1)
    tree.partial_fit([0.0], 0)
    assert tree.predict([123.0]) == 1


def rule_stream(n, seed=0):
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-1.0, 1.0, size=(n, 1))
    ys = (xs[:, 0] > 0).astype(int)
    return xs, ys


def test_noiseless_rule_stream_prequential_accuracy():
    tree = HoeffdingTreeClassifier(n_features=1, n_classes=2)
    xs, ys = rule_stream(5000)
    correct = 0
    for x, y in zip(xs, ys):
        correct += tree.predict(x) == y
        tree.partial_fit(x, y)
    assert correct / len(xs) >= 0.95
    assert tree.n_nodes() > 1


def test_deterministic_replay():
    xs, ys = rule_stream(3000, seed=5)
    preds = []
    for _ in range(2):
        tree = HoeffdingTreeClassifier(n_features=1, n_classes=2)
        run = []
        for x, y in zip(xs, ys):
            run.append(tree.predict(x))
            tree.partial_fit(x, y)
        preds.append(run)
    assert preds[0] == preds[1]


def test_no_split_before_grace_period():
    tree = HoeffdingTreeClassifier(n_features=1, n_classes=2, grace_period=200)
    xs, ys = rule_stream(199)
    tree.fit_many(zip(xs, ys))
    assert tree.n_nodes() == 1


def test_gain_gap_splits_at_first_evaluation():
    # one dominant feature, one weak, two pure-noise features: the
    # best-vs-second gain gap beats the bound as soon as grace elapses
    rng = np.random.default_rng(3)
    means = np.array([[6.0, 0.5, 0.0, 0.0], [-6.0, -0.5, 0.0, 0.0]])
    tree = HoeffdingTreeClassifier(n_features=4, n_classes=2)
    for _ in range(200):
        y = rng.integers(0, 2)
        tree.partial_fit(means[y] + rng.normal(0, 0.5, 4), y)
    assert tree.n_nodes() == 3
    # the split must be on the dominant feature
    assert tree._root.split_feature == 0


def test_reset_returns_to_cold_start():
    tree = HoeffdingTreeClassifier(n_features=1, n_classes=2)
    xs, ys = rule_stream(1000)
    tree.fit_many(zip(xs, ys))
    assert tree.n_nodes() > 1
    tree.reset()
    assert tree.n_nodes() == 1
    assert tree.predict([0.5]) == 0


def test_input_validation():
    tree = HoeffdingTreeClassifier(n_features=2, n_classes=2)
    with pytest.raises(ValueError):
        tree.partial_fit([1.0], 0)  # wrong feature count
    with pytest.raises(ValueError):
        tree.partial_fit([1.0, 2.0], 2)  # label out of range
    with pytest.raises(ValueError):
        HoeffdingTreeClassifier(n_features=0, n_classes=2)


def test_get_params_round_trip():
    tree = HoeffdingTreeClassifier(n_features=3, n_classes=5, grace_period=50)
    params = tree.get_params()
    clone = HoeffdingTreeClassifier(**params)
    assert clone.get_params() == params
