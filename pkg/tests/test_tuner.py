import numpy as np
import pytest

from canids import dataset, tuner
from canids.tuner import SearchSpace, cross_validate, random_search
from canids.trainer import TrainConfig

EASY = dataset.parse_synthetic_spec(
    "class Normal id=100 payload=1122334455667788+-2 n=60\n"
    "class DoS id=000 payload=0000000000000000 n=60\n")


@pytest.fixture(scope="module")
def easy():
    return dataset.gen_synthetic(EASY, 0)


def test_space_sampling_in_range():
    space = SearchSpace()
    rng = np.random.default_rng(0)
    seen = [space.sample(rng) for _ in range(500)]
    assert all(space.contains(c) for c in seen)
    assert {c["hidden_layers"] for c in seen} == {1, 2, 3, 4, 5}


def test_space_validation():
    with pytest.raises(ValueError):
        SearchSpace(hidden_layers=(3, 2))


def test_single_trial(easy):
    space = SearchSpace((1, 2), (5, 10), (2, 3))
    best, trials = random_search(space, easy, trials=1, k=3, seed=1)
    assert trials == [best]
    assert len(best.fold_accuracy) == 3


def test_degenerate_space(easy):
    space = SearchSpace((2, 2), (10, 10), (3, 3))
    _, trials = random_search(space, easy, trials=3, k=3, seed=0)
    assert all(t.config == {"hidden_layers": 2, "num_batches": 10, "epochs": 3} for t in trials)


def test_tie_break_prefers_fewer_layers(easy):
    space = SearchSpace((1, 3), (10, 10), (30, 30))
    # seed 5 draws H = 3, 3, 1, 3, 2, 2: deeper configs come first
    best, trials = random_search(space, easy, trials=6, k=3, seed=5)
    assert [t.config["hidden_layers"] for t in trials] == [3, 3, 1, 3, 2, 2]
    assert sum(t.mean_accuracy == 1.0 for t in trials) >= 2
    assert best.mean_accuracy == 1.0
    assert best.config["hidden_layers"] == 1
    assert all(best.mean_accuracy >= t.mean_accuracy for t in trials)


def test_reproducible(easy):
    space = SearchSpace((1, 3), (5, 20), (2, 4))
    a = random_search(space, easy, trials=3, k=3, seed=11)
    b = random_search(space, easy, trials=3, k=3, seed=11)
    assert [t.config for t in a[1]] == [t.config for t in b[1]]
    assert [t.fold_accuracy for t in a[1]] == [t.fold_accuracy for t in b[1]]
    assert a[0].index == b[0].index


def test_too_few_samples():
    tiny = dataset.Dataset(np.zeros((3, 9)), [0, 1, 0], ("a", "b"))
    with pytest.raises(dataset.TooFewSamples):
        random_search(SearchSpace(), tiny, trials=1, k=10)


def test_cross_validation_report(easy):
    cv = cross_validate(easy, 1, TrainConfig(epochs=20, num_batches=10, seed=0), k=4, seed=0)
    assert len(cv.folds) == 4
    assert sum(f.confusion.total for f in cv.folds) == len(easy)
    report = cv.cv()
    assert ("Average", "dr") in report
    for entry in report.values():
        assert entry.cv_percent is None or (np.isfinite(entry.cv_percent) and entry.cv_percent >= 0)
    text = cv.summary()
    assert text.count("\n") > 4 and "cv_percent" in text


def test_trial_log(easy):
    rows = []
    random_search(SearchSpace((1, 1), (5, 5), (2, 2)), easy, trials=2, k=2, log=rows.append)
    assert len(rows) == 2 and "H=1" in rows[0]
