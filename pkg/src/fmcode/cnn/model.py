"""The identification network.

Fixed topology for the production model: two depthwise conv-pool stages,
three separable conv-pool stages, a fully-connected embedding layer and
a softmax classifier.  For a 256 x d input the temporal lengths run
256 -> 128 -> 64 -> 32 -> 16 -> 8 and the third stage outputs 96
channels.  A miniature variant exists for numerical tests.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateTaskError
from .layers import (
    Dense,
    DepthwiseConv1D,
    Dropout,
    MaxPool1D,
    PointwiseConv1D,
    ReLU,
    softmax,
)

INPUT_LENGTH = 256
EMBEDDING_DIM = 128


class ConvStage:
    """conv (+ optional pointwise) -> ReLU -> 2x1 maxpool."""

    def __init__(self, depthwise: DepthwiseConv1D, pointwise: PointwiseConv1D | None):
        self.depthwise = depthwise
        self.pointwise = pointwise
        self.relu = ReLU()
        self.pool = MaxPool1D()

    def params(self):
        p = list(self.depthwise.params())
        if self.pointwise is not None:
            p += self.pointwise.params()
        return p

    def forward(self, x, train=False):
        h = self.depthwise.forward(x, train)
        if self.pointwise is not None:
            h = self.pointwise.forward(h, train)
        h = self.relu.forward(h, train)
        return self.pool.forward(h, train)

    def backward(self, grad):
        g = self.pool.backward(grad)
        g = self.relu.backward(g)
        if self.pointwise is not None:
            g = self.pointwise.backward(g)
        return self.depthwise.backward(g)


class CnnModel:
    """Conv stack + FC embedding + softmax classifier."""

    def __init__(
        self,
        stages: list[ConvStage],
        fc: Dense,
        classifier: Dense,
        class_labels: list[str],
        input_length: int,
        input_dims: int,
        dropout_rate: float = 0.5,
        dtype=np.float64,
    ):
        self.stages = stages
        self.fc = fc
        self.fc_relu = ReLU()
        self.dropout = Dropout(dropout_rate)
        self.classifier = classifier
        self.class_labels = list(class_labels)
        self.input_length = input_length
        self.input_dims = input_dims
        self.dtype = dtype

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    def params(self):
        out = []
        for stage in self.stages:
            out += stage.params()
        out += self.fc.params() + self.classifier.params()
        return out

    def zero_grads(self):
        for p in self.params():
            p.grad[...] = 0.0

    def forward(self, x: np.ndarray, train: bool = False, rng: np.random.Generator | None = None):
        """Returns (logits, embedding); embedding is pre-dropout."""
        h = np.asarray(x, dtype=self.dtype)
        if h.ndim == 2:
            h = h[None]
        assert h.shape[1] == self.input_length and h.shape[2] == self.input_dims
        for stage in self.stages:
            h = stage.forward(h, train)
        self._flat_shape = h.shape
        h = h.reshape(h.shape[0], -1)
        emb = self.fc_relu.forward(self.fc.forward(h, train), train)
        dropped = self.dropout.forward(emb, train, rng)
        logits = self.classifier.forward(dropped, train)
        return logits, emb

    def backward(self, dlogits: np.ndarray, dembedding: np.ndarray | None = None):
        """Backprop from logits grad, plus an optional extra gradient
        flowing directly into the embedding (center loss)."""
        g = self.classifier.backward(dlogits)
        g = self.dropout.backward(g)
        if dembedding is not None:
            g = g + dembedding
        g = self.fc_relu.backward(g)
        g = self.fc.backward(g)
        g = g.reshape(self._flat_shape)
        for stage in reversed(self.stages):
            g = stage.backward(g)
        return g

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        logits, _ = self.forward(x, train=False)
        return softmax(logits)

    def embed(self, x: np.ndarray) -> np.ndarray:
        _, emb = self.forward(x, train=False)
        return emb

    # -- serialization ------------------------------------------------------

    def state_dict(self) -> dict:
        arrays = {}
        for i, p in enumerate(self.params()):
            arrays[f"{i:03d}_{p.name}"] = p.value
        return {
            "class_labels": self.class_labels,
            "input_length": self.input_length,
            "input_dims": self.input_dims,
            "dropout_rate": self.dropout.rate,
            "arrays": arrays,
        }

    def load_arrays(self, arrays: dict) -> None:
        for i, p in enumerate(self.params()):
            key = f"{i:03d}_{p.name}"
            value = np.asarray(arrays[key], dtype=self.dtype)
            assert value.shape == p.value.shape, f"shape mismatch for {key}"
            p.value[...] = value


def build_identifier(
    input_dims: int,
    class_labels: list[str],
    seed: int = 0,
    dropout_rate: float = 0.5,
    dtype=np.float64,
) -> CnnModel:
    """Production topology: d -> 2d -> 4d -> 96 -> 128 -> 192, input 256."""
    if len(class_labels) < 2:
        raise DegenerateTaskError("need at least 2 account classes")
    rng = np.random.default_rng(seed)
    d = input_dims
    stages = [
        ConvStage(DepthwiseConv1D(d, 2, rng, dtype), None),
        ConvStage(DepthwiseConv1D(2 * d, 2, rng, dtype), None),
        ConvStage(DepthwiseConv1D(4 * d, 1, rng, dtype), PointwiseConv1D(4 * d, 96, rng, dtype)),
        ConvStage(DepthwiseConv1D(96, 1, rng, dtype), PointwiseConv1D(96, 128, rng, dtype)),
        ConvStage(DepthwiseConv1D(128, 1, rng, dtype), PointwiseConv1D(128, 192, rng, dtype)),
    ]
    flat = (INPUT_LENGTH // 2**5) * 192
    fc = Dense(flat, EMBEDDING_DIM, rng, dtype)
    classifier = Dense(EMBEDDING_DIM, len(class_labels), rng, dtype)
    return CnnModel(stages, fc, classifier, class_labels, INPUT_LENGTH, d, dropout_rate, dtype)


def build_mini(
    input_dims: int = 2,
    input_length: int = 16,
    class_labels: list[str] = ("a", "b", "c"),
    seed: int = 0,
    embedding_dim: int = 8,
    dtype=np.float64,
) -> CnnModel:
    """Tiny model for gradient checks: one depthwise + one separable stage."""
    rng = np.random.default_rng(seed)
    d = input_dims
    stages = [
        ConvStage(DepthwiseConv1D(d, 2, rng, dtype), None),
        ConvStage(DepthwiseConv1D(2 * d, 1, rng, dtype), PointwiseConv1D(2 * d, 6, rng, dtype)),
    ]
    flat = (input_length // 4) * 6
    fc = Dense(flat, embedding_dim, rng, dtype)
    classifier = Dense(embedding_dim, len(class_labels), rng, dtype)
    return CnnModel(
        stages, fc, classifier, list(class_labels), input_length, d,
        dropout_rate=0.0, dtype=dtype,
    )
