"""Finite-difference oracle, written independently of the library's forward/backward code."""
import numpy as np

STEP = 1e-5
FLOOR = 1e-6  # gradients smaller than this are compared on an absolute scale


def reference_loss(params, dims, x, label, l2):
    off = 0
    a = np.asarray(x, dtype=np.float64)
    penalty = 0.0
    for l in range(len(dims) - 1):
        fi, fo = int(dims[l]), int(dims[l + 1])
        W = params[off:off + fi * fo].reshape(fi, fo)
        off += fi * fo
        b = params[off:off + fo]
        off += fo
        penalty += float((W ** 2).sum())
        z = a @ W + b
        a = np.where(z > 0, z, 0.0) if l < len(dims) - 2 else z
    z = a - a.max()
    p = np.exp(z) / np.exp(z).sum()
    return -np.log(max(p[label], 1e-12)) + l2 * penalty


def numeric_grad(params, dims, x, label, l2):
    g = np.empty_like(params)
    for i in range(params.size):
        old = params[i]
        params[i] = old + STEP
        up = reference_loss(params, dims, x, label, l2)
        params[i] = old - STEP
        down = reference_loss(params, dims, x, label, l2)
        params[i] = old
        g[i] = (up - down) / (2 * STEP)
    return g


def max_rel_error(analytic, numeric):
    den = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), FLOOR)
    return float(np.max(np.abs(analytic - numeric) / den))


def random_triple(rng, num_hidden, num_classes):
    from canids.nncore import allocate_layers, kaiming_init

    arch = allocate_layers(num_hidden, num_classes)
    model = kaiming_init(arch, int(rng.integers(2**31)))
    model.params[~model.weight_mask()] = rng.normal(0, 0.1, size=(~model.weight_mask()).sum())
    x = rng.random(arch.input_dim)
    label = int(rng.integers(num_classes))
    return model, x, label
