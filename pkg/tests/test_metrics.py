import numpy as np
import pytest

from tempmark.exceptions import DataError
from tempmark.metrics import (
    best_f1_threshold,
    metrics_at_threshold,
    pairwise_auc,
    roc,
    tpr_at_fpr,
)


@pytest.mark.parametrize(
    "pos, neg, auc",
    [
        ([0.9, 0.8], [0.1, 0.2], 1.0),
        ([0.3, 0.5, 0.5], [0.5, 0.3, 0.5], 0.5),
        ([0.9, 0.4], [0.6, 0.1], 0.75),
        ([0.1], [0.9], 0.0),
    ],
)
def test_auc_examples(pos, neg, auc):
    assert roc(pos, neg).auc == auc
    assert pairwise_auc(pos, neg) == auc


def test_confusion_counts_example():
    m = metrics_at_threshold([0.9, 0.4], [0.6, 0.1], 0.5)
    assert (m.tp, m.fp, m.fn, m.tn) == (1, 1, 1, 1)
    assert tuple(m) == (0.5, 0.5, 0.5, 0.5)


def test_perfect_split_and_degenerate_threshold():
    assert tuple(metrics_at_threshold([0.9, 0.8], [0.1, 0.2], 0.5)) == (1.0, 1.0, 0.0, 1.0)
    f1, tpr, fpr, _ = metrics_at_threshold([0.9, 0.8], [0.1, 0.2], 2.0)
    assert (f1, tpr, fpr) == (0.0, 0.0, 0.0)


def test_empty_or_nan_scores():
    with pytest.raises(DataError, match="empty"):
        roc([], [0.1])
    with pytest.raises(DataError, match="NaN"):
        roc([float("nan")], [0.1])


def test_curve_shape():
    curve = roc([0.9, 0.4, 0.4], [0.6, 0.1])
    assert np.isinf(curve.thresholds[-1])
    assert (curve.fpr[-1], curve.tpr[-1]) == (0.0, 0.0)
    assert (curve.fpr[0], curve.tpr[0]) == (1.0, 1.0)
    assert np.all(np.diff(curve.fpr) <= 0) and np.all(np.diff(curve.tpr) <= 0)
    lines = curve.to_csv().splitlines()
    assert lines[0] == "threshold,fpr,tpr" and len(lines) == len(curve.points) + 1


def test_tpr_at_fpr_examples():
    perfect = roc([0.9, 0.8], [0.1, 0.2])
    assert tpr_at_fpr(perfect, 0.02) == 1.0
    assert tpr_at_fpr(roc([0.1], [0.9]), 0.0) == 0.0
    rng = np.random.default_rng(0)
    chance = roc(rng.random(20_000), rng.random(20_000))
    for f in (0.02, 0.1, 0.5):
        assert tpr_at_fpr(chance, f) == pytest.approx(f, abs=0.02)


def test_roc_matches_pairwise_on_random_instances():
    rng = np.random.default_rng(5)
    for _ in range(2000):
        n_p, n_n = rng.integers(1, 51, size=2)
        # coarse grid forces ties
        pos = rng.integers(0, 8, size=n_p) / 7.0
        neg = rng.integers(0, 8, size=n_n) / 7.0
        assert abs(roc(pos, neg).auc - pairwise_auc(pos, neg)) <= 1e-12


def test_shift_invariance():
    rng = np.random.default_rng(6)
    for _ in range(200):
        pos, neg = rng.integers(0, 20, size=15), rng.integers(0, 20, size=12)
        a, b = roc(pos, neg), roc(pos + 100, neg + 100)
        assert a.auc == b.auc
        np.testing.assert_array_equal(a.tpr, b.tpr)
        np.testing.assert_array_equal(a.fpr, b.fpr)


def test_tpr_at_fpr_monotone():
    rng = np.random.default_rng(7)
    for _ in range(200):
        curve = roc(rng.normal(1, 1, 30), rng.normal(0, 1, 30))
        values = [tpr_at_fpr(curve, f) for f in np.linspace(0, 1, 41)]
        assert all(a <= b for a, b in zip(values, values[1:]))


def test_best_f1_threshold():
    pos, neg = [0.9, 0.8, 0.3], [0.5, 0.1]
    t = best_f1_threshold(pos, neg)
    best = max(metrics_at_threshold(pos, neg, s).f1 for s in pos + neg)
    assert metrics_at_threshold(pos, neg, t).f1 == best
    assert t == 0.3
