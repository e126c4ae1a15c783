import numpy as np
import pytest

from bolimes.data import SyntheticSpec, stratified_split, synthesize
from bolimes.learners import (ForestParams, GbtParams, TrainedModel, TreeParams, feature_importances, predict,
                              predict_proba, staged_log_loss, train_classifier, train_forest, train_gbt, train_tree)
from bolimes.metrics import evaluate


def test_single_class_tree_is_a_leaf():
    m = train_tree(np.random.default_rng(0).normal(size=(6, 3)), np.zeros(6, dtype=int))
    assert m.trees[0].n_nodes == 1
    assert predict(m, np.array([[100.0, -5, 3]])).tolist() == [0]


def test_threshold_at_midpoint():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    m = train_tree(X, y, TreeParams(max_depth=1, n_candidate_features="all"))
    t = m.trees[0]
    assert t.feature[0] == 0 and t.threshold[0] == 1.5
    assert np.array_equal(predict(m, X), y)


def test_xor_needs_depth_two():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    shallow = train_tree(X, y, TreeParams(max_depth=1, n_candidate_features="all"))
    deep = train_tree(X, y, TreeParams(max_depth=2, n_candidate_features="all"))
    assert np.mean(predict(shallow, X) == y) == 0.5
    assert np.mean(predict(deep, X) == y) == 1.0


def test_tree_respects_depth_and_leaf_size():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(300, 5))
    y = (X[:, 0] + rng.normal(0, 1, 300) > 0).astype(int)
    m = train_tree(X, y, TreeParams(max_depth=4, min_samples_leaf=7, n_candidate_features="all"))
    t = m.trees[0]
    assert t.depth() <= 4
    assert t.n_node_samples[t.is_leaf].min() >= 7
    # children partition their parent's samples
    internal = np.flatnonzero(~t.is_leaf)
    assert np.array_equal(t.n_node_samples[internal],
                          t.n_node_samples[t.left[internal]] + t.n_node_samples[t.right[internal]])


def test_forest_of_one_equals_tree():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(80, 6))
    y = (X[:, 1] > 0).astype(int) + (X[:, 2] > 1).astype(int)
    probe = rng.normal(size=(50, 6))
    tree_params = TreeParams(max_depth=6, n_candidate_features="all")
    f = train_forest(X, y, ForestParams(1, tree_params, bootstrap=False, seed=3))
    t = train_tree(X, y, tree_params, seed=3)
    assert np.array_equal(predict(f, probe), predict(t, probe))


def test_forest_deterministic_and_thread_invariant():
    ds, _ = synthesize(SyntheticSpec(60, 3, 20, 2, 2.0, 4))
    probe = np.random.default_rng(5).normal(size=(40, 23))
    a = train_forest(ds.matrix, ds.labels, ForestParams(30, seed=9), threads=1)
    b = train_forest(ds.matrix, ds.labels, ForestParams(30, seed=9), threads=3)
    assert np.array_equal(predict_proba(a, probe), predict_proba(b, probe))
    assert np.array_equal(a.importances, b.importances)


def test_forest_vote_fraction():
    X1 = np.zeros((3, 1))
    zero = train_tree(X1, np.zeros(3, dtype=int), n_classes=2).trees[0]
    one = train_tree(X1, np.ones(3, dtype=int), n_classes=2).trees[0]
    model = TrainedModel("forest", 2, 1, (zero,) * 120 + (one,) * 80)
    assert predict_proba(model, np.zeros((1, 1))).tolist() == [[0.6, 0.4]]


def test_forest_holdout_on_separated_data():
    ds, _ = synthesize(SyntheticSpec(200, 10, 40, 2, 3.0, 7))
    split = stratified_split(ds, 0.2, 1)
    m = train_forest(split.train.matrix, split.train.labels, ForestParams(200, TreeParams(10), seed=1))
    assert evaluate(m, split.test).accuracy >= 0.95


def test_importance_single_signal():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(300, 8))
    y = (X[:, 0] > 0).astype(int)
    # every split sees feature 0; with sqrt sampling noise splits take about 20%
    imp = feature_importances(train_forest(X, y, ForestParams(100, TreeParams(n_candidate_features="all"), seed=2)))
    assert imp[0] > 0.8 and imp[1:].sum() < 0.1
    assert abs(imp.sum() - 1) < 1e-9


def test_importance_zero_when_nothing_splits():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 4))
    y = np.arange(20) % 2
    m = train_forest(X, y, ForestParams(10, TreeParams(min_samples_leaf=20), seed=1))
    assert feature_importances(m).tolist() == [0.0] * 4
    with pytest.raises(TypeError):
        feature_importances(train_tree(X, y))


def test_gbt_tiny_learning_rate_predicts_prior():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 3))
    y = np.array([0] * 10 + [1] * 30 + [2] * 10)
    m = train_gbt(X, y, GbtParams(n_estimators=3, max_depth=3, learning_rate=1e-9))
    assert np.all(predict(m, rng.normal(size=(20, 3))) == 1)


def test_gbt_fits_separable_data_and_loss_decreases():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(200, 4))
    y = (X @ np.array([1.0, -2.0, 0.5, 0.0]) > 0).astype(int)
    m = train_gbt(X, y, GbtParams(n_estimators=50, max_depth=3, learning_rate=0.1))
    assert np.mean(predict(m, X) == y) >= 0.99
    loss = staged_log_loss(m, X, y)
    assert np.all(np.diff(loss) <= 1e-12)


def test_gbt_multiclass_with_default_settings():
    ds, _ = synthesize(SyntheticSpec(90, 3, 5, 3, 3.0, 2))
    m = train_classifier(GbtParams(), ds.matrix, ds.labels, seed=5)
    P = predict_proba(m, ds.matrix)
    assert np.allclose(P.sum(axis=1), 1.0)
    assert np.mean(predict(m, ds.matrix) == ds.labels) >= 0.95


def test_constant_predictor_probability_one():
    m = train_tree(np.zeros((4, 2)), np.array([1, 1, 1, 1]), n_classes=3)
    assert predict_proba(m, np.ones((2, 2))).tolist() == [[0.0, 1.0, 0.0]] * 2


def test_predict_rejects_wrong_width():
    m = train_tree(np.zeros((4, 2)), np.array([0, 1, 0, 1]))
    with pytest.raises(ValueError):
        predict(m, np.zeros((1, 3)))


def test_param_validation():
    with pytest.raises(ValueError):
        TreeParams(max_depth=0)
    with pytest.raises(ValueError):
        TreeParams(n_candidate_features="log2")
    with pytest.raises(ValueError):
        GbtParams(learning_rate=0.0)
    assert TreeParams().candidates(500) == 22
