from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from canids import metrics
from canids.metrics import (ConfusionMatrix, coefficient_of_variation, confusion, macro_average,
                            per_class, tp_tn_fp_fn)


def brute_force(actual, predicted, k):
    """Count TP/TN/FP/FN straight from the label pairs."""
    tp = sum(a == k and p == k for a, p in zip(actual, predicted))
    fn = sum(a == k and p != k for a, p in zip(actual, predicted))
    fp = sum(a != k and p == k for a, p in zip(actual, predicted))
    tn = sum(a != k and p != k for a, p in zip(actual, predicted))

    def r(n, d):
        return None if d == 0 else n / d

    return (tp, tn, fp, fn), dict(dr=r(tp, tp + fn), fpr=r(fp, tn + fp), accuracy=r(tp + tn, tp + tn + fp + fn),
                                  precision=r(tp, tp + fp), f1=r(2 * tp, 2 * tp + fp + fn))


def test_confusion_examples():
    np.testing.assert_array_equal(confusion([0, 1, 2], [0, 1, 2], 3).counts, np.eye(3, dtype=int))
    assert confusion([0, 0], [1, 1], 2).counts.tolist() == [[0, 2], [0, 0]]
    rng = np.random.default_rng(0)
    assert confusion(rng.integers(0, 3, 20), rng.integers(0, 3, 20), 3).total == 20


def test_confusion_errors():
    with pytest.raises(metrics.LengthMismatch):
        confusion([0, 1], [0], 2)
    with pytest.raises(metrics.LabelOutOfRange):
        confusion([0, 2], [0, 1], 2)


def test_worked_matrix():
    m = ConfusionMatrix([[8, 2], [1, 9]])
    assert tp_tn_fp_fn(m, 0) == (8, 9, 1, 2)
    pc = per_class(m, 0)
    assert pc.dr == pytest.approx(0.8, abs=1e-12)
    assert pc.fpr == pytest.approx(0.1, abs=1e-12)
    assert pc.accuracy == pytest.approx(0.85, abs=1e-12)
    assert pc.precision == pytest.approx(float(Fraction(8, 9)), abs=1e-12)
    assert pc.f1 == pytest.approx(float(Fraction(16, 19)), abs=1e-12)


def test_perfect_and_empty_class():
    m = ConfusionMatrix([[3, 0, 0], [0, 4, 0], [0, 0, 0]])
    for k in (0, 1):
        assert per_class(m, k) == metrics.PerClassMetrics(1.0, 0.0, 1.0, 1.0, 1.0)
    empty = per_class(m, 2)
    assert empty.dr is None and empty.precision is None and empty.f1 is None
    assert empty.fpr == 0.0
    with pytest.raises(IndexError):
        tp_tn_fp_fn(m, 3)


def test_oracle_random(rng):
    for _ in range(200):
        c = int(rng.integers(2, 7))
        n = int(rng.integers(1, 51))
        a = rng.integers(0, c, n).tolist()
        p = rng.integers(0, c, n).tolist()
        m = confusion(a, p, c)
        for k in range(c):
            counts, ref = brute_force(a, p, k)
            assert tp_tn_fp_fn(m, k) == counts
            assert per_class(m, k).as_dict() == ref


@given(st.integers(2, 6).flatmap(lambda c: st.tuples(
    st.just(c), st.lists(st.tuples(st.integers(0, c - 1), st.integers(0, c - 1)), min_size=1, max_size=50))))
def test_partition_and_f1_identity(case):
    c, pairs = case
    a, p = zip(*pairs)
    m = confusion(a, p, c)
    for k in range(c):
        assert sum(tp_tn_fp_fn(m, k)) == m.total == len(pairs)
        pc = per_class(m, k)
        if pc.dr and pc.precision:
            assert pc.f1 == pytest.approx(2 * pc.dr * pc.precision / (pc.dr + pc.precision), abs=1e-12)


def test_macro_average():
    pc = metrics.PerClassMetrics(0.9, 0.1, 0.95, 0.8, 0.85)
    assert macro_average([pc, pc, pc]) == pc
    assert macro_average([metrics.PerClassMetrics(1.0, 0, 1, 1, 1),
                          metrics.PerClassMetrics(0.8, 0, 1, 1, 1)]).dr == pytest.approx(0.9)
    skip = macro_average([metrics.PerClassMetrics(None, 0, 1, None, 1),
                          metrics.PerClassMetrics(0.5, 0, 1, 1, 1),
                          metrics.PerClassMetrics(1.0, 0, 1, 1, 1)])
    assert skip.dr == 0.75 and skip.precision == 1.0


@given(st.lists(st.floats(0, 1), min_size=1, max_size=8), st.randoms())
def test_macro_average_permutation_invariant(vals, rnd):
    rows = [metrics.PerClassMetrics(v, 1 - v, v, v, v) for v in vals]
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert macro_average(rows) == macro_average(shuffled)


def test_coefficient_of_variation():
    assert coefficient_of_variation([1, 1, 1]) == 0.0
    assert coefficient_of_variation([2, 4]) == pytest.approx(100 / 3)
    with pytest.raises(metrics.ZeroMean):
        coefficient_of_variation([0, 0])


@given(st.floats(1e-6, 1.0), st.integers(1, 12))
def test_cv_constant_is_exact_zero(v, n):
    assert coefficient_of_variation([v] * n) == 0.0


def test_cv_report_and_tables():
    rep = metrics.cv_report({"dr": [0.99, 0.99], "fpr": [0.0, 0.0], "f1": [None, 0.5]})
    assert rep["dr"].cv_percent == 0.0
    assert rep["fpr"].cv_percent is None
    assert rep["f1"].mean == 0.5
    m = ConfusionMatrix([[8, 2], [1, 9]])
    text = metrics.format_table(["A", "B"], metrics.all_classes(m))
    assert "0.800000" in text and "Average" in text
    csv_text = metrics.format_table(["A", "B"], metrics.all_classes(m), fmt="csv")
    first = csv_text.splitlines()[1].split(",")
    assert float(first[1]) == per_class(m, 0).dr
    assert "A" in metrics.format_confusion(m, ["A", "B"])
