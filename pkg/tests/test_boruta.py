import numpy as np
import pytest
from hypothesis import given, strategies as st

from bolimes.boruta import (BorutaParams, Status, benjamini_hochberg, boruta_run, decide, hit_decision,
                            make_shadow, shadow_threshold)
from bolimes.data import Dataset


def test_make_shadow_permutes_each_column():
    X = np.arange(30, dtype=float).reshape(10, 3)
    S = make_shadow(X, 4)
    assert S.shape == (10, 6)
    assert np.array_equal(S[:, :3], X)
    for j in range(3):
        assert sorted(S[:, 3 + j]) == sorted(X[:, j])
    assert np.array_equal(S, make_shadow(X, 4))
    assert not np.array_equal(S, make_shadow(X, 5))


def test_shadow_threshold_examples():
    assert shadow_threshold([0.1, 0.3, 0.2], 100) == 0.3
    assert shadow_threshold([0.1, 0.3, 0.2], 50) == 0.2
    for q in (1, 37.5, 100):
        assert shadow_threshold([0.7], q) == 0.7


def test_hit_decision_examples():
    assert hit_decision(20, 20) is Status.CONFIRMED
    assert hit_decision(10, 20) is Status.TENTATIVE
    assert hit_decision(0, 20) is Status.REJECTED
    with pytest.raises(ValueError):
        hit_decision(5, 4)


def test_benjamini_hochberg_step_up():
    # sorted p: 0.001, 0.02, 0.03, 0.5 vs alpha*i/m = 0.0125, 0.025, 0.0375, 0.05
    assert benjamini_hochberg([0.03, 0.001, 0.5, 0.02], 0.05).tolist() == [True, True, False, True]
    assert benjamini_hochberg([0.2, 0.3], 0.05).tolist() == [False, False]


@given(st.lists(st.integers(0, 40), min_size=1, max_size=20))
def test_two_step_is_no_more_permissive_than_bonferroni_per_trial(hits):
    trials = 40
    codes = decide(hits, trials, 0.01, two_step=True)
    single = np.array([decide([h], trials, 0.01, two_step=True)[0] for h in hits])
    # the batch correction can only withhold decisions a lone test would make
    assert np.all((codes == 0) | (codes == single))


def _ds(X, y):
    return Dataset(X, y, tuple(f"f{j}" for j in range(X.shape[1])), "b", ("a", "b"))


def test_label_copy_confirmed_and_constant_rejected():
    rng = np.random.default_rng(3)
    n = 80
    y = np.arange(n) % 2
    X = rng.normal(size=(n, 12))
    X[:, 2] = y + 0.01 * rng.normal(size=n)
    X[:, 7] = 5.0
    r = boruta_run(_ds(X, y), BorutaParams(n_estimators=50, max_iter=40, seed=1))
    assert r.status[2] is Status.CONFIRMED
    assert r.status[7] is not Status.CONFIRMED
    assert r.hits[7] == 0
    assert len(r.shadow_thresholds) == r.iterations_run <= 40
    assert set(r.confirmed) | set(r.tentative) | set(r.rejected) == set(range(12))


def test_boruta_is_deterministic_and_thread_invariant():
    rng = np.random.default_rng(4)
    y = np.arange(60) % 2
    X = rng.normal(size=(60, 10))
    X[:, 0] += 2 * y
    p = BorutaParams(n_estimators=30, max_iter=15, seed=8)
    a = boruta_run(_ds(X, y), p, threads=1)
    b = boruta_run(_ds(X, y), p, threads=2)
    assert a.status == b.status
    assert np.array_equal(a.hits, b.hits)
    assert a.shadow_thresholds == b.shadow_thresholds


def test_param_validation():
    for bad in ({"alpha": 0.0}, {"alpha": 1.0}, {"percentile": 0}, {"max_iter": 0}, {"shadow_scope": "x"}):
        with pytest.raises(ValueError):
            BorutaParams(**bad)
