"""The lightweight MLP: layer allocation, init, forward/backward, prediction.

Trainable layer widths follow ``width_i = i * c`` counted from the output
(output layer i=1). With H hidden layers the hidden widths, input side first,
are ``(H+1)c, Hc, ..., 2c``. The input layer is the raw feature vector.
"""
from dataclasses import dataclass, field

import numpy as np

from . import canio, kernels

PROB_CLIP = kernels.PROB_CLIP
DEFAULT_L2 = 1e-4


class ModelError(ValueError):
    pass


class InvalidArity(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class TraceMismatch(ModelError):
    pass


@dataclass(frozen=True)
class ModelArchitecture:
    input_dim: int
    num_classes: int
    layer_widths: tuple  # hidden widths input->output, then the output width

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        if self.input_dim < 1 or not widths or any(w < 1 for w in widths):
            raise InvalidArity(f"bad architecture {self.input_dim} -> {widths}")
        if widths[-1] != self.num_classes:
            raise InvalidArity(f"output width {widths[-1]} != num_classes {self.num_classes}")
        object.__setattr__(self, "layer_widths", widths)

    @property
    def num_hidden(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def hidden_widths(self) -> tuple:
        return self.layer_widths[:-1]

    @property
    def dims(self) -> np.ndarray:
        return np.array((self.input_dim,) + self.layer_widths, dtype=np.int64)

    def shapes(self):
        d = (self.input_dim,) + self.layer_widths
        return [(d[i], d[i + 1]) for i in range(len(d) - 1)]

    @property
    def num_params(self) -> int:
        return sum(fi * fo + fo for fi, fo in self.shapes())


def allocate_layers(num_hidden: int, num_classes: int, input_dim: int = canio.NUM_FEATURES) -> ModelArchitecture:
    if num_hidden < 1 or num_classes < 2 or input_dim < 1:
        raise InvalidArity(f"need H >= 1, c >= 2, d >= 1 (got H={num_hidden}, c={num_classes}, d={input_dim})")
    widths = tuple(i * num_classes for i in range(num_hidden + 1, 0, -1))
    return ModelArchitecture(input_dim, num_classes, widths)


def fixed_width_architecture(num_hidden: int, width: int, num_classes: int,
                             input_dim: int = canio.NUM_FEATURES) -> ModelArchitecture:
    """Every hidden layer gets the same width (the baseline the allocation rule is compared against)."""
    if num_hidden < 1 or num_classes < 2 or width < 1:
        raise InvalidArity("need H >= 1, c >= 2, width >= 1")
    return ModelArchitecture(input_dim, num_classes, (width,) * num_hidden + (num_classes,))


@dataclass
class Model:
    """An architecture plus one flat float64 parameter vector.

    ``layers()`` returns ``(W, b)`` views into ``params``; W is fan_in x fan_out.
    """

    arch: ModelArchitecture
    params: np.ndarray
    class_names: tuple = ()
    norm_denominators: tuple = (canio.ID_DENOMINATOR, canio.BYTE_DENOMINATOR)
    _dims: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.params = np.ascontiguousarray(self.params, dtype=np.float64)
        if self.params.shape != (self.arch.num_params,):
            raise DimensionMismatch(f"expected {self.arch.num_params} parameters, got {self.params.shape}")
        if not np.all(np.isfinite(self.params)):
            raise ModelError("parameters must be finite")
        self.class_names = tuple(self.class_names) or tuple(f"class{i}" for i in range(self.arch.num_classes))
        if len(self.class_names) != self.arch.num_classes:
            raise DimensionMismatch("one class name per output unit is required")
        self._dims = self.arch.dims

    @property
    def dims(self) -> np.ndarray:
        return self._dims

    @property
    def num_params(self) -> int:
        return self.params.size

    def layers(self):
        return kernels._layer_views(self.params, self._dims)

    def weight_mask(self) -> np.ndarray:
        mask = np.zeros(self.params.size, dtype=bool)
        off = 0
        for fi, fo in self.arch.shapes():
            mask[off:off + fi * fo] = True
            off += fi * fo + fo
        return mask

    def copy(self) -> "Model":
        return Model(self.arch, self.params.copy(), self.class_names, self.norm_denominators)


def kaiming_init(arch: ModelArchitecture, seed: int, class_names=()) -> Model:
    """He-normal weights (std = sqrt(2 / fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    params = np.zeros(arch.num_params)
    off = 0
    for fi, fo in arch.shapes():
        params[off:off + fi * fo] = rng.normal(0.0, np.sqrt(2.0 / fi), size=fi * fo)
        off += fi * fo + fo
    return Model(arch, params, class_names)


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


@dataclass(frozen=True)
class ForwardTrace:
    x: np.ndarray
    pre: tuple   # affine outputs per layer (the last entry are the logits)
    post: tuple  # ReLU outputs per hidden layer
    probs: np.ndarray
    n_params: int = 0


def _check_input(model: Model, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.arch.input_dim,):
        raise DimensionMismatch(f"expected input of length {model.arch.input_dim}, got shape {x.shape}")
    return x


def forward(model: Model, x) -> ForwardTrace:
    x = _check_input(model, x)
    pre, post = [], []
    a = x
    layers = model.layers()
    for l, (W, b) in enumerate(layers):
        z = a @ W + b
        pre.append(z)
        if l < len(layers) - 1:
            a = np.maximum(z, 0.0)
            post.append(a)
    return ForwardTrace(x, tuple(pre), tuple(post), softmax(pre[-1]), model.num_params)


def l2_penalty(model: Model) -> float:
    return float(sum(np.sum(W * W) for W, _ in model.layers()))


def scce_loss(trace: ForwardTrace, label: int, model: Model, l2_lambda: float = DEFAULT_L2) -> float:
    if not 0 <= label < trace.probs.size:
        raise ModelError(f"label {label} out of range for {trace.probs.size} classes")
    return float(-np.log(max(trace.probs[label], PROB_CLIP)) + l2_lambda * l2_penalty(model))


def backward(model: Model, trace: ForwardTrace, label: int, l2_lambda: float = DEFAULT_L2) -> list:
    """Exact gradient of ``scce_loss``; returns ``[(dW, db), ...]`` in layer order."""
    layers = model.layers()
    if (trace.n_params != model.num_params or len(trace.pre) != len(layers)
            or trace.probs.size != model.arch.num_classes):
        raise TraceMismatch("trace was not produced by this model")
    delta = trace.probs.copy()
    delta[label] -= 1.0
    grads = [None] * len(layers)
    for l in range(len(layers) - 1, -1, -1):
        W, _ = layers[l]
        a_in = trace.x if l == 0 else trace.post[l - 1]
        grads[l] = (np.outer(a_in, delta) + 2.0 * l2_lambda * W, delta.copy())
        if l > 0:
            delta = (W @ delta) * (trace.pre[l - 1] > 0.0)
    return grads


def flatten_grads(grads) -> np.ndarray:
    return np.concatenate([np.concatenate([dW.ravel(), db]) for dW, db in grads])


def predict(model: Model, x):
    """``(label, confidence)``; ties go to the lowest class index."""
    probs = forward(model, x).probs
    k = int(np.argmax(probs))
    return k, float(probs[k])


def predict_fast(model: Model, x):
    """Same contract as ``predict`` through the active kernel backend."""
    x = _check_input(model, x)
    k, p = kernels.predict_one(model.params, model.dims, x)
    return int(k), float(p)


def predict_batch(model: Model, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.arch.input_dim:
        raise DimensionMismatch(f"expected (n, {model.arch.input_dim}) inputs, got {X.shape}")
    return kernels.predict_batch(model.params, model.dims, X)
