"""Minimal 1D conv-net layers with explicit backward passes.

Activations are (N, L, C) arrays.  Every layer caches what its backward
pass needs; parameters are exposed as dicts so the optimizer can update
them in place.
"""

from __future__ import annotations

import numpy as np


class Param:
    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)


def _shifted(x: np.ndarray, offset: int) -> np.ndarray:
    """x shifted along the time axis with zero (same) padding, k=3."""
    n, length, c = x.shape
    out = np.zeros_like(x)
    if offset == -1:
        out[:, 1:] = x[:, :-1]
    elif offset == 0:
        out = x
    else:
        out[:, :-1] = x[:, 1:]
    return out


class DepthwiseConv1D:
    """Kernel-3 per-channel convolution with channel multiplier.

    Output channel c*mult + j depends only on input channel c, so the
    first layers detect per-axis features without mixing sensor axes.
    """

    def __init__(self, c_in: int, multiplier: int, rng: np.random.Generator, dtype=np.float64):
        k = 3
        scale = np.sqrt(2.0 / (k * 1))
        self.c_in = c_in
        self.multiplier = multiplier
        self.W = Param("dw_W", (rng.standard_normal((k, c_in, multiplier)) * scale).astype(dtype))
        self.b = Param("dw_b", np.zeros(c_in * multiplier, dtype=dtype))

    def params(self):
        return [self.W, self.b]

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._x = x
        n, length, c = x.shape
        out = np.zeros((n, length, c * self.multiplier), dtype=x.dtype)
        for t, offset in enumerate((-1, 0, 1)):
            xs = _shifted(x, offset)  # (n, l, c)
            # (n,l,c) x (c,m) -> (n,l,c,m)
            out += (xs[..., None] * self.W.value[t][None, None]).reshape(n, length, -1)
        out += self.b.value
        return out

    def backward(self, grad: np.ndarray) -> np.ndarray:
        x = self._x
        n, length, c = x.shape
        g = grad.reshape(n, length, c, self.multiplier)
        self.b.grad += grad.sum(axis=(0, 1))
        dx = np.zeros_like(x)
        for t, offset in enumerate((-1, 0, 1)):
            xs = _shifted(x, offset)
            self.W.grad[t] += np.einsum("nlc,nlcm->cm", xs, g)
            # route grads back through the shift (transpose = opposite shift)
            contrib = np.einsum("nlcm,cm->nlc", g, self.W.value[t])
            dx += _shifted(contrib, -offset)
        return dx


class PointwiseConv1D:
    """1x1 convolution mixing channels."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, dtype=np.float64):
        scale = np.sqrt(2.0 / c_in)
        self.W = Param("pw_W", (rng.standard_normal((c_in, c_out)) * scale).astype(dtype))
        self.b = Param("pw_b", np.zeros(c_out, dtype=dtype))

    def params(self):
        return [self.W, self.b]

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._x = x
        return x @ self.W.value + self.b.value

    def backward(self, grad: np.ndarray) -> np.ndarray:
        x = self._x
        self.W.grad += np.einsum("nlc,nlo->co", x, grad)
        self.b.grad += grad.sum(axis=(0, 1))
        return grad @ self.W.value.T


class ReLU:
    def params(self):
        return []

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._mask = x > 0
        return x * self._mask

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad * self._mask


class MaxPool1D:
    """2-by-1 max pooling; length must be even."""

    def params(self):
        return []

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        n, length, c = x.shape
        assert length % 2 == 0, "pooling needs an even length"
        pairs = x.reshape(n, length // 2, 2, c)
        self._argmax = pairs.argmax(axis=2)
        self._shape = x.shape
        return pairs.max(axis=2)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        n, half, c = grad.shape
        out = np.zeros((n, half, 2, c), dtype=grad.dtype)
        idx_n, idx_l, idx_c = np.ogrid[:n, :half, :c]
        out[idx_n, idx_l, self._argmax, idx_c] = grad
        return out.reshape(self._shape)


class Dense:
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, dtype=np.float64):
        scale = np.sqrt(2.0 / n_in)
        self.W = Param("fc_W", (rng.standard_normal((n_in, n_out)) * scale).astype(dtype))
        self.b = Param("fc_b", np.zeros(n_out, dtype=dtype))

    def params(self):
        return [self.W, self.b]

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        self._x = x
        return x @ self.W.value + self.b.value

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self.W.grad += self._x.T @ grad
        self.b.grad += grad.sum(axis=0)
        return grad @ self.W.value.T


class Dropout:
    """Inverted dropout; identity outside training."""

    def __init__(self, rate: float):
        self.rate = rate
        self._mask = None

    def params(self):
        return []

    def forward(self, x: np.ndarray, train: bool = False, rng: np.random.Generator | None = None) -> np.ndarray:
        if not train or self.rate <= 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (rng.random(x.shape) < keep) / keep
        return x * self._mask

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return grad
        return grad * self._mask


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
