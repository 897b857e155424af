"""Mini-batch RMSprop training and timed evaluation."""
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels, metrics
from .dataset import Dataset
from .nncore import DEFAULT_L2, Model, ModelArchitecture, kaiming_init


class TrainingError(ValueError):
    pass


class ClassMismatch(TrainingError):
    pass


class EmptyDataset(TrainingError):
    pass


class ShapeMismatch(TrainingError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    num_batches: int = 300
    learning_rate: float = 0.001
    rho: float = 0.9
    epsilon: float = 1e-8
    l2_lambda: float = DEFAULT_L2
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.num_batches < 1:
            raise ValueError("epochs and num_batches must be positive")
        if self.learning_rate <= 0 or self.epsilon <= 0 or self.l2_lambda < 0:
            raise ValueError("learning_rate and epsilon must be positive, l2_lambda nonnegative")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass
class RmsState:
    mean_square: np.ndarray

    @classmethod
    def zeros_like(cls, params) -> "RmsState":
        return cls(np.zeros_like(np.asarray(params, dtype=np.float64)))


@dataclass
class TrainReport:
    loss: list = field(default_factory=list)
    accuracy: list = field(default_factory=list)
    seconds: float = 0.0

    def as_table(self) -> str:
        lines = ["epoch\tloss\taccuracy"]
        for i, (l, a) in enumerate(zip(self.loss, self.accuracy), start=1):
            lines.append(f"{i}\t{l:.6f}\t{a:.6f}")
        return "\n".join(lines) + "\n"


def batch_size(train_size: int, num_batches: int) -> int:
    if train_size < 1 or num_batches < 1:
        raise ValueError("train_size and num_batches must be positive")
    return max(1, train_size // num_batches)


def batch_bounds(train_size: int, num_batches: int) -> list:
    """``(start, stop)`` per batch; the last batch absorbs the remainder."""
    bs = batch_size(train_size, num_batches)
    count = min(num_batches, train_size // bs)
    starts = [i * bs for i in range(count)]
    stops = starts[1:] + [train_size]
    return list(zip(starts, stops))


def rmsprop_step(params, grads, state: RmsState, cfg: TrainConfig):
    """Functional RMSprop update; returns ``(new_params, new_state)``.

    ``s <- rho*s + (1-rho)*g^2`` then ``p <- p - lr*g/(sqrt(s) + eps)``.
    """
    params = np.array(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    ms = np.array(state.mean_square, dtype=np.float64)
    if not params.shape == grads.shape == ms.shape:
        raise ShapeMismatch(f"params {params.shape}, grads {grads.shape}, state {ms.shape}")
    shape = params.shape
    p, g, s = params.ravel(), np.ascontiguousarray(grads).ravel(), ms.ravel()
    kernels.rmsprop_update(p, g, s, cfg.learning_rate, cfg.rho, cfg.epsilon)
    return p.reshape(shape), RmsState(s.reshape(shape))


def train(arch: ModelArchitecture, train_set: Dataset, cfg: TrainConfig = TrainConfig(),
          impl=None, progress=None):
    """Train a freshly initialized model; deterministic for a given seed and backend.

    ``progress`` is an optional ``callable(epoch, loss, accuracy)``.
    """
    if len(train_set) == 0:
        raise EmptyDataset("training set is empty")
    if train_set.num_classes != arch.num_classes:
        raise ClassMismatch(f"dataset has {train_set.num_classes} classes, model {arch.num_classes}")
    if train_set.X.shape[1] != arch.input_dim:
        raise ClassMismatch(f"dataset has {train_set.X.shape[1]} features, model expects {arch.input_dim}")
    impl = impl or kernels.ACTIVE
    init_seed, shuffle_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    model = kaiming_init(arch, int(init_seed.generate_state(1)[0]), train_set.class_names)
    rng = np.random.default_rng(shuffle_seed)
    params, dims = model.params, model.dims
    grad = np.empty_like(params)
    mean_sq = np.zeros_like(params)
    n = len(train_set)
    bounds = batch_bounds(n, cfg.num_batches)
    report = TrainReport()
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        X = train_set.X[order]
        y = train_set.y[order]
        loss_sum = 0.0
        correct = 0
        for start, stop in bounds:
            loss, ok = impl.loss_and_grad(params, dims, X[start:stop], y[start:stop], cfg.l2_lambda, grad)
            impl.rmsprop_update(params, grad, mean_sq, cfg.learning_rate, cfg.rho, cfg.epsilon)
            loss_sum += loss
            correct += ok
        if not np.all(np.isfinite(params)):
            raise TrainingError(f"parameters diverged in epoch {epoch + 1}")
        report.loss.append(loss_sum / len(bounds))
        report.accuracy.append(correct / n)
        if progress is not None:
            progress(epoch + 1, report.loss[-1], report.accuracy[-1])
    report.seconds = time.perf_counter() - t0
    return model, report


def evaluate(model: Model, test_set: Dataset, timed: bool = True, impl=None):
    """Confusion matrix over ``test_set`` and per-sample classification times (seconds).

    With ``timed`` each sample is classified on its own and timed; otherwise
    one batched call is made and the latency list is empty.
    """
    if test_set.num_classes != model.arch.num_classes:
        raise ClassMismatch(f"dataset has {test_set.num_classes} classes, model {model.arch.num_classes}")
    impl = impl or kernels.ACTIVE
    params, dims = model.params, model.dims
    if not timed:
        pred, _ = impl.predict_batch(params, dims, test_set.X)
        return metrics.confusion(test_set.y, pred, model.arch.num_classes), []
    pred = np.empty(len(test_set), dtype=np.int64)
    latencies = np.empty(len(test_set))
    clock = time.perf_counter
    predict_one = impl.predict_one
    for i, x in enumerate(test_set.X):
        t = clock()
        k, _ = predict_one(params, dims, x)
        latencies[i] = clock() - t
        pred[i] = k
    return metrics.confusion(test_set.y, pred, model.arch.num_classes), latencies.tolist()
