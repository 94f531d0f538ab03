"""Two-conv CNN with one fully connected output per weather metric.

    conv 4->8 (3x3, pad 1) -> ReLU -> maxpool 2x2/2
    conv 8->16 (3x3, pad 1) -> ReLU -> maxpool 2x2/2
    flatten (channel, row, col) -> one FC per head, 16*floor(N'/4)*floor(M'/4) -> C_w

The ReLUs are our addition; without a nonlinearity the network is affine.
"""

import math

import numpy as np

from . import kernels
from .losses import classification_grad, loss_classification, loss_regression, regression_grad

CONV1_OUT = 8
CONV2_OUT = 16
KERNEL = 3


def fc_input_size(n_prime: int, m_prime: int) -> int:
    return CONV2_OUT * (n_prime // 4) * (m_prime // 4)


class CnnModel:
    """Parameters live in ``self.params`` (an ordered dict of arrays)."""

    def __init__(self, n_prime, m_prime, heads, in_channels=4, dtype=np.float64, seed=0):
        if n_prime < 4 or m_prime < 4:
            raise ValueError("input must be at least 4 x 4 to survive two 2x2 poolings")
        self.n_prime = int(n_prime)
        self.m_prime = int(m_prime)
        self.in_channels = int(in_channels)
        self.heads = tuple((str(name), int(c)) for name, c in heads)
        self.dtype = np.dtype(dtype)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0xC0DE])))
        f = self.fc_in
        shapes = [
            ("conv1.w", (CONV1_OUT, self.in_channels, KERNEL, KERNEL), self.in_channels * KERNEL * KERNEL),
            ("conv1.b", (CONV1_OUT,), self.in_channels * KERNEL * KERNEL),
            ("conv2.w", (CONV2_OUT, CONV1_OUT, KERNEL, KERNEL), CONV1_OUT * KERNEL * KERNEL),
            ("conv2.b", (CONV2_OUT,), CONV1_OUT * KERNEL * KERNEL),
        ]
        for name, c in self.heads:
            shapes.append((f"fc.{name}.w", (c, f), f))
            shapes.append((f"fc.{name}.b", (c,), f))
        self.params = {}
        for name, shape, fan_in in shapes:
            bound = math.sqrt(1.0 / fan_in)
            self.params[name] = rng.uniform(-bound, bound, size=shape).astype(self.dtype)

    @property
    def fc_in(self) -> int:
        return fc_input_size(self.n_prime, self.m_prime)

    @property
    def head_names(self):
        return [h for h, _ in self.heads]

    def zero_grads(self):
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    # ------------------------------------------------------------------
    def _as_input(self, batch):
        x = np.asarray(batch)
        if x.ndim == 3:
            x = x[None]
        if x.shape[1:] != (self.n_prime, self.m_prime, self.in_channels):
            raise ValueError(
                f"expected batch of shape (B, {self.n_prime}, {self.m_prime}, {self.in_channels}), got {x.shape}"
            )
        return np.ascontiguousarray(x.transpose(0, 3, 1, 2), dtype=self.dtype)

    def forward(self, batch, return_cache=False):
        p = self.params
        x = self._as_input(batch)
        z1 = kernels.conv2d_forward(x, p["conv1.w"], p["conv1.b"])
        a1 = np.maximum(z1, 0.0)
        h1, arg1 = kernels.maxpool2_forward(a1)
        z2 = kernels.conv2d_forward(h1, p["conv2.w"], p["conv2.b"])
        a2 = np.maximum(z2, 0.0)
        h2, arg2 = kernels.maxpool2_forward(a2)
        flat = h2.reshape(h2.shape[0], -1)
        out = {name: flat @ p[f"fc.{name}.w"].T + p[f"fc.{name}.b"] for name in self.head_names}
        if not return_cache:
            return out
        cache = dict(x=x, z1=z1, h1=h1, arg1=arg1, z2=z2, arg2=arg2, h2_shape=h2.shape, flat=flat)
        return out, cache

    def backward(self, cache, grad_out):
        """Gradients of a scalar loss w.r.t. every parameter given d loss / d outputs."""
        p = self.params
        g = {}
        flat = cache["flat"]
        dflat = np.zeros_like(flat)
        for name in self.head_names:
            d = np.asarray(grad_out[name], dtype=self.dtype).reshape(flat.shape[0], -1)
            g[f"fc.{name}.w"] = d.T @ flat
            g[f"fc.{name}.b"] = d.sum(axis=0)
            dflat += d @ p[f"fc.{name}.w"]
        dh2 = dflat.reshape(cache["h2_shape"])
        z2 = cache["z2"]
        da2 = kernels.maxpool2_backward(dh2, cache["arg2"], z2.shape[2], z2.shape[3])
        dz2 = da2 * (z2 > 0)
        dh1, g["conv2.w"], g["conv2.b"] = kernels.conv2d_backward(cache["h1"], p["conv2.w"], dz2)
        z1 = cache["z1"]
        da1 = kernels.maxpool2_backward(dh1, cache["arg1"], z1.shape[2], z1.shape[3])
        dz1 = da1 * (z1 > 0)
        _, g["conv1.w"], g["conv1.b"] = kernels.conv2d_backward(cache["x"], p["conv1.w"], dz1)
        return {k: g[k] for k in p}


def forward(model: CnnModel, batch):
    return model.forward(batch)


def backward(model: CnnModel, batch, labels, loss_kind: str, class_weights=None):
    """Run forward + loss + backprop. Returns ``(loss, grads)``.

    ``labels`` maps head name to class indices (classification) or target
    values (regression).
    """
    out, cache = model.forward(batch, return_cache=True)
    if loss_kind == "classification":
        loss = loss_classification(out, labels, class_weights)
        dout = classification_grad(out, labels, class_weights)
    elif loss_kind == "regression":
        loss = loss_regression(out, labels)
        dout = regression_grad(out, labels)
    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}")
    return loss, model.backward(cache, dout)


def predict_class(logits):
    """Arg-max per head; ties go to the lowest class index."""
    return {k: np.argmax(np.asarray(v), axis=1) for k, v in logits.items()}


def predict_value(outputs):
    return {k: np.asarray(v).reshape(len(v), -1)[:, 0].copy() for k, v in outputs.items()}
