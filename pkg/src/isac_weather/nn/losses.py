"""Weighted cross-entropy and MSE, summed over heads.

Outputs, labels and weights are dicts keyed by head name. Cross-entropy is a
sum over samples; MSE is a per-head mean over samples.
"""

import numpy as np


def _log_softmax(x):
    x = np.asarray(x, dtype=np.float64)
    shift = x.max(axis=1, keepdims=True)
    return x - shift - np.log(np.exp(x - shift).sum(axis=1, keepdims=True))


def _labels(y, n_classes):
    y = np.asarray(y)
    if y.dtype.kind not in "iu":
        raise TypeError("class labels must be integers")
    if np.any(y < 0) or np.any(y >= n_classes):
        raise IndexError(f"class index out of range [0, {n_classes})")
    return y.astype(np.intp)


def _weights(class_weights, name, n_classes):
    if class_weights is None or class_weights.get(name) is None:
        return np.ones(n_classes)
    w = np.asarray(class_weights[name], dtype=np.float64)
    if w.shape != (n_classes,):
        raise ValueError(f"class weights for {name!r} must have shape ({n_classes},)")
    return w


def loss_classification(logits, labels, class_weights=None) -> float:
    total = 0.0
    for name, x in logits.items():
        C = x.shape[1]
        y = _labels(labels[name], C)
        phi = _weights(class_weights, name, C)
        logp = _log_softmax(x)[np.arange(len(y)), y]
        total += float(np.sum(-phi[y] * logp))
    return total


def classification_grad(logits, labels, class_weights=None):
    grads = {}
    for name, x in logits.items():
        C = x.shape[1]
        y = _labels(labels[name], C)
        phi = _weights(class_weights, name, C)
        g = np.exp(_log_softmax(x))
        g[np.arange(len(y)), y] -= 1.0
        grads[name] = (g * phi[y][:, None]).astype(np.asarray(x).dtype)
    return grads


def loss_regression(outputs, targets) -> float:
    total = 0.0
    for name, x in outputs.items():
        x = np.asarray(x, dtype=np.float64).reshape(len(x), -1)[:, 0]
        y = np.asarray(targets[name], dtype=np.float64).reshape(-1)
        if x.shape != y.shape:
            raise ValueError(f"head {name!r}: {x.shape[0]} outputs vs {y.shape[0]} targets")
        total += float(np.mean((x - y) ** 2))
    return total


def regression_grad(outputs, targets):
    grads = {}
    for name, x in outputs.items():
        arr = np.asarray(x)
        xv = arr.reshape(len(arr), -1)[:, 0].astype(np.float64)
        y = np.asarray(targets[name], dtype=np.float64).reshape(-1)
        grads[name] = (2.0 * (xv - y) / len(y)).reshape(len(y), 1).astype(arr.dtype)
    return grads
