"""Allocation-rule vs fixed-width comparison, and numba vs numpy kernel timing."""
import time
from dataclasses import dataclass, replace

import numpy as np

from . import kernels, metrics
from .dataset import Dataset, split
from .nncore import allocate_layers, fixed_width_architecture, kaiming_init
from .trainer import TrainConfig, evaluate, train

DEFAULT_FIXED_WIDTHS = (10, 25, 50, 100, 200)


@dataclass(frozen=True)
class BenchRow:
    label: str
    layer_widths: tuple
    num_params: int
    train_seconds: float
    test_seconds: float
    tpr: float
    fpr: float
    accuracy: float

    @property
    def total_seconds(self) -> float:
        return self.train_seconds + self.test_seconds


def compare_allocations(ds: Dataset, num_hidden: int = 3, widths=DEFAULT_FIXED_WIDTHS,
                        cfg: TrainConfig = TrainConfig(), train_fraction: float = 0.8, seed: int = 0):
    """Train the allocation-rule model and one fixed-width model per entry of ``widths``
    on the same split; TPR and FPR are macro averages over classes."""
    train_set, test_set = split(ds, train_fraction, seed)
    archs = [("i*c", allocate_layers(num_hidden, ds.num_classes, ds.X.shape[1]))]
    archs += [(str(w), fixed_width_architecture(num_hidden, w, ds.num_classes, ds.X.shape[1])) for w in widths]
    rows = []
    for label, arch in archs:
        model, report = train(arch, train_set, cfg)
        t = time.perf_counter()
        cm, _ = evaluate(model, test_set, timed=False)
        test_s = time.perf_counter() - t
        avg = metrics.macro_average(metrics.all_classes(cm))
        rows.append(BenchRow(label, arch.layer_widths, arch.num_params, report.seconds, test_s,
                             avg.dr, avg.fpr, cm.overall_accuracy()))
    return rows


def format_rows(rows) -> str:
    lines = ["neurons\twidths\tparams\ttrain_s\ttest_s\tTPR\tFPR\taccuracy"]
    for r in rows:
        widths = "-".join(str(w) for w in r.layer_widths)
        lines.append(f"{r.label}\t{widths}\t{r.num_params}\t{r.train_seconds:.3f}\t{r.test_seconds:.3f}"
                     f"\t{metrics._fmt(r.tpr)}\t{metrics._fmt(r.fpr, 8)}\t{metrics._fmt(r.accuracy)}")
    return "\n".join(lines) + "\n"


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def compare_backends(num_hidden: int = 3, num_classes: int = 6, n: int = 4096, batch: int = 32,
                     repeat: int = 5, seed: int = 0):
    """Seconds per call of each hot kernel under both backends (best of ``repeat``).

    Returns ``{kernel: {"numba": s, "numpy": s}}``.
    """
    rng = np.random.default_rng(seed)
    model = kaiming_init(allocate_layers(num_hidden, num_classes), seed)
    params, dims = model.params, model.dims
    X = rng.random((n, dims[0]))
    y = rng.integers(0, num_classes, size=n)
    results = {}
    for impl in (kernels.NUMBA, kernels.NUMPY):
        kernels.warmup(impl)
        grad = np.empty_like(params)
        p = params.copy()
        s = np.zeros_like(p)
        timings = {
            "predict_one": _best_of(lambda: [impl.predict_one(params, dims, X[i]) for i in range(1000)], repeat) / 1000,
            "predict_batch": _best_of(lambda: impl.predict_batch(params, dims, X), repeat),
            "loss_and_grad": _best_of(lambda: impl.loss_and_grad(params, dims, X[:batch], y[:batch], 1e-4, grad), repeat),
            "rmsprop_update": _best_of(lambda: impl.rmsprop_update(p, grad, s, 1e-3, 0.9, 1e-8), repeat),
            "confusion_counts": _best_of(lambda: impl.confusion_counts(y, y, num_classes), repeat),
        }
        ds = Dataset(X[:1024], y[:1024], tuple(f"c{i}" for i in range(num_classes)))
        cfg = replace(TrainConfig(), epochs=2, num_batches=32)
        timings["train_2_epochs"] = _best_of(lambda: train(model.arch, ds, cfg, impl=impl), max(1, repeat // 2))
        for k, v in timings.items():
            results.setdefault(k, {})[impl.name] = v
    return results


def format_backends(results) -> str:
    lines = ["kernel\tnumba_us\tnumpy_us\tspeedup"]
    for k, v in results.items():
        lines.append(f"{k}\t{v['numba'] * 1e6:.2f}\t{v['numpy'] * 1e6:.2f}\t{v['numpy'] / v['numba']:.1f}x")
    return "\n".join(lines) + "\n"
