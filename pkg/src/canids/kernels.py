"""Hot numeric kernels, in two interchangeable implementations.

All kernels work on a *flat* float64 parameter vector plus a ``dims`` vector
``[input_dim, width_1, ..., num_classes]``. Layer ``l`` occupies
``dims[l] * dims[l+1]`` weights (row-major, fan_in x fan_out) followed by
``dims[l+1]`` biases.

``NUMBA`` holds explicit-loop kernels compiled with numba, ``NUMPY`` the
vectorized fallbacks. The module-level names (``predict_one``,
``loss_and_grad`` ...) are bound to whichever set ``CANIDS_NUMBA`` selects.
Both sets agree to rounding; each is deterministic on its own.
"""
from types import SimpleNamespace

import numpy as np

from ._jit import USE_NUMBA, njit

PROB_CLIP = 1e-12


# --------------------------------------------------------------------------
# numba kernels
# --------------------------------------------------------------------------

@njit
def _nb_max_width(dims):
    maxw = 0
    for l in range(dims.shape[0]):
        if dims[l] > maxw:
            maxw = dims[l]
    return maxw


@njit
def _nb_classify(params, dims, x, a, z):
    # a, z: scratch buffers of at least the widest layer
    n_layers = dims.shape[0] - 1
    for i in range(dims[0]):
        a[i] = x[i]
    off = 0
    for l in range(n_layers):
        fi = dims[l]
        fo = dims[l + 1]
        boff = off + fi * fo
        for j in range(fo):
            z[j] = params[boff + j]
        for k in range(fi):
            ak = a[k]
            row = off + k * fo
            for j in range(fo):
                z[j] += ak * params[row + j]
        off = boff + fo
        if l < n_layers - 1:
            for j in range(fo):
                a[j] = z[j] if z[j] > 0.0 else 0.0
    c = dims[n_layers]
    m = z[0]
    for j in range(1, c):
        if z[j] > m:
            m = z[j]
    total = 0.0
    for j in range(c):
        z[j] = np.exp(z[j] - m)
        total += z[j]
    best = 0
    bestp = z[0] / total
    for j in range(1, c):
        pj = z[j] / total
        if pj > bestp:
            best = j
            bestp = pj
    return best, bestp


@njit
def _nb_predict_one(params, dims, x):
    maxw = _nb_max_width(dims)
    return _nb_classify(params, dims, x, np.empty(maxw), np.empty(maxw))


@njit
def _nb_predict_batch(params, dims, X):
    n = X.shape[0]
    maxw = _nb_max_width(dims)
    a = np.empty(maxw)
    z = np.empty(maxw)
    labels = np.empty(n, dtype=np.int64)
    conf = np.empty(n)
    for s in range(n):
        labels[s], conf[s] = _nb_classify(params, dims, X[s], a, z)
    return labels, conf


@njit
def _nb_loss_and_grad(params, dims, X, y, l2, grad):
    n_layers = dims.shape[0] - 1
    c = dims[n_layers]
    maxw = 0
    for l in range(dims.shape[0]):
        if dims[l] > maxw:
            maxw = dims[l]
    woff = np.empty(n_layers, dtype=np.int64)
    boff = np.empty(n_layers, dtype=np.int64)
    off = 0
    for l in range(n_layers):
        woff[l] = off
        boff[l] = off + dims[l] * dims[l + 1]
        off = boff[l] + dims[l + 1]

    for i in range(grad.shape[0]):
        grad[i] = 0.0
    # acts[0] is the input, acts[l] the ReLU output of layer l, acts[L] the probs
    acts = np.zeros((n_layers + 1, maxw))
    delta = np.empty(maxw)
    prev = np.empty(maxw)
    loss = 0.0
    correct = 0
    n = X.shape[0]
    for s in range(n):
        for i in range(dims[0]):
            acts[0, i] = X[s, i]
        for l in range(n_layers):
            fi = dims[l]
            fo = dims[l + 1]
            out = acts[l + 1]
            for j in range(fo):
                out[j] = 0.0
            for k in range(fi):
                ak = acts[l, k]
                row = woff[l] + k * fo
                for j in range(fo):
                    out[j] += ak * params[row + j]
            for j in range(fo):
                out[j] += params[boff[l] + j]
            if l < n_layers - 1:
                for j in range(fo):
                    if out[j] <= 0.0:
                        out[j] = 0.0
        probs = acts[n_layers]
        m = probs[0]
        for j in range(1, c):
            if probs[j] > m:
                m = probs[j]
        total = 0.0
        for j in range(c):
            probs[j] = np.exp(probs[j] - m)
            total += probs[j]
        for j in range(c):
            probs[j] = probs[j] / total
        label = y[s]
        p = probs[label]
        loss -= np.log(p if p > PROB_CLIP else PROB_CLIP)
        best = 0
        for j in range(1, c):
            if probs[j] > probs[best]:
                best = j
        if best == label:
            correct += 1

        for j in range(c):
            delta[j] = probs[j]
        delta[label] -= 1.0
        for l in range(n_layers - 1, -1, -1):
            fi = dims[l]
            fo = dims[l + 1]
            for k in range(fi):
                ak = acts[l, k]
                row = woff[l] + k * fo
                for j in range(fo):
                    grad[row + j] += ak * delta[j]
            for j in range(fo):
                grad[boff[l] + j] += delta[j]
            if l > 0:
                for k in range(fi):
                    if acts[l, k] > 0.0:
                        row = woff[l] + k * fo
                        t = 0.0
                        for j in range(fo):
                            t += params[row + j] * delta[j]
                        prev[k] = t
                    else:
                        prev[k] = 0.0
                delta, prev = prev, delta

    for i in range(grad.shape[0]):
        grad[i] /= n
    penalty = 0.0
    for l in range(n_layers):
        for i in range(woff[l], boff[l]):
            w = params[i]
            penalty += w * w
            grad[i] += 2.0 * l2 * w
    return loss / n + l2 * penalty, correct


@njit
def _nb_rmsprop_update(params, grad, mean_sq, lr, rho, eps):
    for i in range(params.shape[0]):
        g = grad[i]
        mean_sq[i] = rho * mean_sq[i] + (1.0 - rho) * (g * g)
        params[i] -= lr * g / (np.sqrt(mean_sq[i]) + eps)


@njit
def _nb_confusion_counts(actual, predicted, c):
    counts = np.zeros((c, c), dtype=np.int64)
    for i in range(actual.shape[0]):
        counts[actual[i], predicted[i]] += 1
    return counts


# --------------------------------------------------------------------------
# numpy kernels
# --------------------------------------------------------------------------

def _layer_views(params, dims):
    views = []
    off = 0
    for l in range(len(dims) - 1):
        fi, fo = int(dims[l]), int(dims[l + 1])
        W = params[off:off + fi * fo].reshape(fi, fo)
        off += fi * fo
        b = params[off:off + fo]
        off += fo
        views.append((W, b))
    return views


def _np_probs(params, dims, X):
    a = X
    views = _layer_views(params, dims)
    for l, (W, b) in enumerate(views):
        z = a @ W + b
        a = np.maximum(z, 0.0) if l < len(views) - 1 else z
    e = np.exp(a - a.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _np_predict_one(params, dims, x):
    p = _np_probs(params, dims, np.asarray(x, dtype=np.float64)[None, :])[0]
    k = int(np.argmax(p))
    return k, float(p[k])


def _np_predict_batch(params, dims, X):
    p = _np_probs(params, dims, X)
    labels = np.argmax(p, axis=1).astype(np.int64)
    return labels, p[np.arange(len(labels)), labels]


def _np_loss_and_grad(params, dims, X, y, l2, grad):
    views = _layer_views(params, dims)
    gviews = _layer_views(grad, dims)
    n = X.shape[0]
    acts = [X]
    a = X
    for l, (W, b) in enumerate(views):
        z = a @ W + b
        a = np.maximum(z, 0.0) if l < len(views) - 1 else z
        acts.append(a)
    e = np.exp(a - a.max(axis=1, keepdims=True))
    probs = e / e.sum(axis=1, keepdims=True)
    rows = np.arange(n)
    p = probs[rows, y]
    loss = float(np.mean(-np.log(np.maximum(p, PROB_CLIP))))
    correct = int(np.count_nonzero(np.argmax(probs, axis=1) == y))

    delta = probs
    delta[rows, y] -= 1.0
    delta /= n
    for l in range(len(views) - 1, -1, -1):
        W, _ = views[l]
        gW, gb = gviews[l]
        gW[...] = acts[l].T @ delta + 2.0 * l2 * W
        gb[...] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ W.T) * (acts[l] > 0.0)
    penalty = sum(float(np.sum(W * W)) for W, _ in views)
    return loss + l2 * penalty, correct


def _np_rmsprop_update(params, grad, mean_sq, lr, rho, eps):
    mean_sq[...] = rho * mean_sq + (1.0 - rho) * (grad * grad)
    params -= lr * grad / (np.sqrt(mean_sq) + eps)


def _np_confusion_counts(actual, predicted, c):
    code = np.asarray(actual, dtype=np.int64) * c + np.asarray(predicted, dtype=np.int64)
    return np.bincount(code, minlength=c * c).reshape(c, c).astype(np.int64)


NUMBA = SimpleNamespace(
    name="numba",
    predict_one=_nb_predict_one,
    predict_batch=_nb_predict_batch,
    loss_and_grad=_nb_loss_and_grad,
    rmsprop_update=_nb_rmsprop_update,
    confusion_counts=_nb_confusion_counts,
)

NUMPY = SimpleNamespace(
    name="numpy",
    predict_one=_np_predict_one,
    predict_batch=_np_predict_batch,
    loss_and_grad=_np_loss_and_grad,
    rmsprop_update=_np_rmsprop_update,
    confusion_counts=_np_confusion_counts,
)

ACTIVE = NUMBA if USE_NUMBA else NUMPY
BACKEND = ACTIVE.name

predict_one = ACTIVE.predict_one
predict_batch = ACTIVE.predict_batch
loss_and_grad = ACTIVE.loss_and_grad
rmsprop_update = ACTIVE.rmsprop_update
confusion_counts = ACTIVE.confusion_counts


def warmup(impl=None):
    """Trigger JIT compilation so the first real call is not billed for it."""
    impl = impl or ACTIVE
    dims = np.array([2, 4, 2], dtype=np.int64)
    params = np.zeros(2 * 4 + 4 + 4 * 2 + 2)
    X = np.zeros((2, 2))
    y = np.zeros(2, dtype=np.int64)
    impl.predict_one(params, dims, X[0])
    impl.predict_batch(params, dims, X)
    g = np.empty_like(params)
    impl.loss_and_grad(params, dims, X, y, 0.0, g)
    impl.rmsprop_update(params.copy(), g, np.zeros_like(params), 1e-3, 0.9, 1e-8)
    impl.confusion_counts(y, y, 2)
