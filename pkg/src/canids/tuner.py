"""k-fold cross-validation and random hyperparameter search."""
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics
from .dataset import Dataset, TooFewSamples, kfold
from .nncore import allocate_layers
from .trainer import TrainConfig, evaluate, train


@dataclass(frozen=True)
class FoldResult:
    confusion: metrics.ConfusionMatrix
    train_seconds: float
    test_seconds: float

    @property
    def accuracy(self) -> float:
        return self.confusion.overall_accuracy()


@dataclass
class CrossValidation:
    class_names: tuple
    folds: list = field(default_factory=list)

    def per_class(self):
        """``[fold][class] -> PerClassMetrics``."""
        return [metrics.all_classes(f.confusion) for f in self.folds]

    def cv(self) -> dict:
        """``{(class name | 'Average', metric): CvEntry}`` across folds."""
        table = self.per_class()
        out = {}
        for k, name in enumerate(list(self.class_names) + ["Average"]):
            rows = [fold[k] if k < len(self.class_names) else metrics.macro_average(fold) for fold in table]
            for m, entry in metrics.cv_report({m: [getattr(r, m) for r in rows] for m in metrics.METRIC_NAMES}).items():
                out[(name, m)] = entry
        return out

    def summary(self) -> str:
        lines = ["fold\taccuracy\tmacro_dr\tmacro_fpr\ttrain_s\ttest_s"]
        for i, (f, pcs) in enumerate(zip(self.folds, self.per_class()), start=1):
            avg = metrics.macro_average(pcs)
            lines.append(f"{i}\t{f.accuracy:.6f}\t{metrics._fmt(avg.dr)}\t{metrics._fmt(avg.fpr)}"
                         f"\t{f.train_seconds:.3f}\t{f.test_seconds:.3f}")
        lines.append("")
        lines.append("class\tmetric\tmean\tstd\tcv_percent")
        for (name, m), e in self.cv().items():
            lines.append(f"{name}\t{m}\t{e.mean:.6f}\t{e.std:.6f}\t{metrics._fmt(e.cv_percent, 4)}")
        return "\n".join(lines) + "\n"


def cross_validate(ds: Dataset, num_hidden: int, cfg: TrainConfig, k: int = 10, seed: int = 0,
                   arch=None) -> CrossValidation:
    arch = arch or allocate_layers(num_hidden, ds.num_classes, ds.X.shape[1])
    result = CrossValidation(ds.class_names)
    for train_set, test_set in kfold(ds, k, seed):
        model, report = train(arch, train_set, cfg)
        t = time.perf_counter()
        cm, _ = evaluate(model, test_set, timed=False)
        result.folds.append(FoldResult(cm, report.seconds, time.perf_counter() - t))
    return result


@dataclass(frozen=True)
class SearchSpace:
    hidden_layers: tuple = (1, 5)
    num_batches: tuple = (100, 500)
    epochs: tuple = (100, 500)

    def __post_init__(self):
        for name in ("hidden_layers", "num_batches", "epochs"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} range {lo}..{hi} is empty or nonpositive")

    def sample(self, rng: np.random.Generator) -> dict:
        return {name: int(rng.integers(lo, hi + 1))
                for name, (lo, hi) in (("hidden_layers", self.hidden_layers),
                                       ("num_batches", self.num_batches),
                                       ("epochs", self.epochs))}

    def contains(self, config: dict) -> bool:
        return all(lo <= config[name] <= hi for name, (lo, hi) in
                   (("hidden_layers", self.hidden_layers), ("num_batches", self.num_batches),
                    ("epochs", self.epochs)))


@dataclass(frozen=True)
class TrialResult:
    index: int
    config: dict
    fold_accuracy: tuple
    seconds_per_fold: float

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracy))

    def row(self) -> str:
        c = self.config
        folds = ",".join(f"{a:.6f}" for a in self.fold_accuracy)
        return (f"{self.index}\tH={c['hidden_layers']}\tbatches={c['num_batches']}\tepochs={c['epochs']}"
                f"\t{folds}\t{self.mean_accuracy:.6f}\t{self.seconds_per_fold:.3f}")


def _rank_key(t: TrialResult):
    # higher accuracy first, then the lighter model
    return (-t.mean_accuracy, t.config["hidden_layers"], t.config["epochs"], t.index)


def random_search(space: SearchSpace, ds: Dataset, trials: int = 20, k: int = 10, seed: int = 0,
                  base: TrainConfig = TrainConfig(), log=None):
    """Score ``trials`` random configs by mean k-fold test accuracy.

    Returns ``(best, all_trials)``. ``log`` receives each trial row as it finishes.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if len(ds) < k or k < 2:
        raise TooFewSamples(f"{len(ds)} samples cannot form {k} folds")
    rng = np.random.default_rng(seed)
    configs = [space.sample(rng) for _ in range(trials)]
    results = []
    for i, config in enumerate(configs):
        cfg = replace(base, epochs=config["epochs"], num_batches=config["num_batches"], seed=seed + i)
        cv = cross_validate(ds, config["hidden_layers"], cfg, k=k, seed=seed)
        secs = float(np.mean([f.train_seconds + f.test_seconds for f in cv.folds]))
        res = TrialResult(i, config, tuple(f.accuracy for f in cv.folds), secs)
        results.append(res)
        if log is not None:
            log(res.row())
    best = min(results, key=_rank_key)
    return best, results
