"""Training and prediction for the identification network."""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateTaskError, TrainingFailureError
from ..signals import Signal
from .augment import stretch_to_fixed
from .layers import softmax
from .model import CnnModel, build_identifier


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lambda_center: float = 0.1
    center_alpha: float = 0.5
    dropout_rate: float = 0.5
    batch_size: int = 32
    seed: int = 0


def cross_entropy(logits: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    probs = softmax(logits)
    n = len(y)
    loss = float(-np.log(np.clip(probs[np.arange(n), y], 1e-300, None)).mean())
    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    return loss, dlogits / n


def center_loss(emb: np.ndarray, y: np.ndarray, centers: np.ndarray):
    """0.5 * mean ||e - c_y||^2 and its gradient w.r.t. the embeddings.

    Centers are treated as constants here; they move via the separate
    exemplar update in `update_centers`.
    """
    diff = emb - centers[y]
    loss = float(0.5 * (diff**2).sum(axis=1).mean())
    return loss, diff / len(y)


def update_centers(centers: np.ndarray, emb: np.ndarray, y: np.ndarray, alpha: float):
    """Per-class center pull toward the batch mean embedding."""
    for cls in np.unique(y):
        mask = y == cls
        delta = (centers[cls] - emb[mask]).sum(axis=0) / (1.0 + mask.sum())
        centers[cls] -= alpha * delta


class Adam:
    def __init__(self, params, lr, beta1, beta2, eps):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]
        self.t = 0

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, p in enumerate(self.params):
            self.m[i] = b1 * self.m[i] + (1 - b1) * p.grad
            self.v[i] = b2 * self.v[i] + (1 - b2) * p.grad**2
            m_hat = self.m[i] / (1 - b1**self.t)
            v_hat = self.v[i] / (1 - b2**self.t)
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def loss_and_grads(
    model: CnnModel,
    x: np.ndarray,
    y: np.ndarray,
    centers: np.ndarray | None,
    lambda_center: float,
    train: bool = False,
    rng: np.random.Generator | None = None,
):
    """One forward+backward; returns the total loss with grads
    accumulated into the model parameters."""
    model.zero_grads()
    logits, emb = model.forward(x, train=train, rng=rng)
    loss, dlogits = cross_entropy(logits, y)
    demb = None
    if centers is not None and lambda_center > 0:
        c_loss, dc = center_loss(emb, y, centers)
        loss += lambda_center * c_loss
        demb = lambda_center * dc
    model.backward(dlogits, demb)
    return loss, emb


def _to_matrix(item, input_length: int) -> np.ndarray:
    if isinstance(item, Signal):
        return stretch_to_fixed(item, input_length)
    return np.asarray(item, dtype=float)


def train_cnn(
    labeled: list[tuple],
    cfg: TrainConfig = TrainConfig(),
    model: CnnModel | None = None,
    dtype=np.float64,
) -> CnnModel:
    """Train over (signal, account_number) pairs.

    Signals are stretched to the model's fixed input length.  The model
    keeps its per-epoch loss history in `model.history` and the final
    class centers in `model.centers`.
    """
    labels = sorted({str(lab) for _, lab in labeled})
    if len(labels) < 2:
        raise DegenerateTaskError("need at least 2 classes to train the identifier")
    if model is None:
        first = _to_matrix(labeled[0][0], 256)
        model = build_identifier(
            first.shape[1], labels, seed=cfg.seed,
            dropout_rate=cfg.dropout_rate, dtype=dtype,
        )
    label_index = {lab: i for i, lab in enumerate(model.class_labels)}
    X = np.stack([_to_matrix(s, model.input_length) for s, _ in labeled]).astype(dtype)
    y = np.array([label_index[str(lab)] for _, lab in labeled])
    rng = np.random.default_rng(cfg.seed)
    n = len(X)
    # start each center at its class's mean initial embedding: with
    # zero-initialized centers the center term begins as a norm penalty
    # on every embedding, which collapses the features before the
    # classifier can use them
    centers = np.zeros((model.n_classes, model.fc.W.value.shape[1]), dtype=dtype)
    if cfg.lambda_center > 0:
        sums = np.zeros_like(centers)
        counts = np.zeros(model.n_classes)
        for start in range(0, n, 256):
            emb0 = model.embed(X[start : start + 256])
            np.add.at(sums, y[start : start + 256], emb0)
            np.add.at(counts, y[start : start + 256], 1.0)
        centers = sums / np.maximum(counts, 1.0)[:, None]
    opt = Adam(model.params(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, emb = loss_and_grads(
                model, X[batch], y[batch], centers, cfg.lambda_center,
                train=True, rng=rng,
            )
            if not np.isfinite(loss):
                raise TrainingFailureError("training diverged (non-finite loss)")
            opt.step()
            update_centers(centers, emb, y[batch], cfg.center_alpha)
            epoch_loss += loss * len(batch)
        history.append(epoch_loss / n)
    model.history = history
    model.centers = centers
    return model


def predict_topk(model: CnnModel, s, k: int) -> list[tuple[str, float]]:
    """Top-k (account_number, probability), descending probability with
    ties broken by ascending account number; k is clipped to n."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > model.n_classes:
        _warnings.warn(
            f"k={k} exceeds {model.n_classes} classes; clipping", RuntimeWarning
        )
        k = model.n_classes
    x = _to_matrix(s, model.input_length)
    probs = model.predict_proba(x)[0]
    order = sorted(range(model.n_classes), key=lambda i: (-probs[i], model.class_labels[i]))
    return [(model.class_labels[i], float(probs[i])) for i in order[:k]]
