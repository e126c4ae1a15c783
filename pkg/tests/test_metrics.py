from fractions import Fraction

import numpy as np
import pytest

from bolimes.metrics import MetricsReport, confusion, weighted_metrics


def test_confusion_examples():
    assert confusion([0, 1, 1], [0, 1, 1], 2).tolist() == [[1, 0], [0, 2]]
    assert confusion([0, 0], [1, 1], 2).tolist() == [[0, 2], [0, 0]]
    with pytest.raises(ValueError):
        confusion([0, 3], [0, 0], 2)


def test_perfect_predictions():
    m = weighted_metrics(np.diag([3, 4, 5]))
    assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)


def test_absent_predicted_class_scores_zero():
    m = weighted_metrics(confusion([0, 0, 1], [0, 0, 0], 2))
    # class 1 is never predicted: precision 0/0 -> 0
    assert m.precision == pytest.approx(float(Fraction(2, 3) * Fraction(2, 3)), abs=1e-15)


def test_report_dict_round_trip():
    m = weighted_metrics(np.array([[5, 1], [2, 7]]))
    assert MetricsReport.from_dict(m.to_dict()).to_dict() == m.to_dict()


def test_rejects_empty_matrix():
    with pytest.raises(ValueError):
        weighted_metrics(np.zeros((2, 2), dtype=int))
