"""Direct supervised aggregators over the full z-vector.

The feedforward head (input 2K -> rectified hidden layer -> K logits) is the
primary aggregator; a multinomial logistic head and a k-nearest-neighbors head
consume the identical layout. Gradient training reuses the fine-grained
checkpointing loop, so the returned parameters are always the best validated
state and runs are bit-deterministic per seed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numerics import log_softmax, softmax
from .training import TrainConfig, TrainingHistory, fit_minibatch_sgd

DEFAULT_HIDDEN = 32


@dataclass
class FFNNParams:
    """Two-layer rectifier network: logits = w2 @ relu(w1 @ z + b1) + b2."""

    w1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (output, hidden)
    b2: np.ndarray  # (output,)
    seed: int = 0

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[0]

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]


@dataclass(frozen=True)
class MetaPrediction:
    logits: np.ndarray
    probabilities: np.ndarray
    label: int


@dataclass
class LRHead:
    """Multinomial logistic head: logits = w @ z + b."""

    w: np.ndarray  # (output, input)
    b: np.ndarray  # (output,)
    seed: int = 0


@dataclass
class KNNHead:
    """Stored training set for k-nearest-neighbor aggregation."""

    Z: np.ndarray
    labels: np.ndarray
    k: int
    num_classes: int


def init_ffnn(input_dim: int, hidden_dim: int, output_dim: int, seed: int) -> FFNNParams:
    """Symmetric uniform init scaled by fan-in; biases start at zero."""
    if input_dim < 1 or hidden_dim < 1 or output_dim < 1:
        raise ValueError("all layer widths must be positive")
    rng = np.random.default_rng(seed)
    bound1 = 1.0 / np.sqrt(input_dim)
    bound2 = 1.0 / np.sqrt(hidden_dim)
    return FFNNParams(
        w1=rng.uniform(-bound1, bound1, size=(hidden_dim, input_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-bound2, bound2, size=(output_dim, hidden_dim)),
        b2=np.zeros(output_dim),
        seed=seed,
    )


def ffnn_forward(params: FFNNParams, Z: np.ndarray) -> np.ndarray:
    """Batch forward pass; Z is (n, input) and the result is (n, output)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != params.input_dim:
        raise ValueError(f"expected input width {params.input_dim}, got {Z.shape[1]}")
    hidden = np.maximum(Z @ params.w1.T + params.b1, 0.0)
    return hidden @ params.w2.T + params.b2


def ffnn_predict(params: FFNNParams, z: Sequence[float] | np.ndarray) -> MetaPrediction:
    logits = ffnn_forward(params, np.asarray(z, dtype=float))[0]
    probs = softmax(logits)
    return MetaPrediction(logits=logits, probabilities=probs, label=int(np.argmax(probs)))


def ffnn_predict_batch(params: FFNNParams, Z: np.ndarray) -> np.ndarray:
    """Predicted labels for a batch (first-maximum argmax per row)."""
    return np.argmax(ffnn_forward(params, Z), axis=1)


def _ce_loss_and_grad_logits(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    n = logits.shape[0]
    logp = log_softmax(logits, axis=1)
    loss = float(-np.mean(logp[np.arange(n), y]))
    grad = softmax(logits, axis=1)
    grad[np.arange(n), y] -= 1.0
    return loss, grad / n


def ffnn_loss(params: FFNNParams, Z: np.ndarray, y: np.ndarray) -> float:
    logits = ffnn_forward(params, Z)
    logp = log_softmax(logits, axis=1)
    return float(-np.mean(logp[np.arange(len(y)), y]))


def ffnn_gradients(params: FFNNParams, Z: np.ndarray, y: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Mean cross-entropy over the batch and its gradients [w1, b1, w2, b2]."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    y = np.asarray(y, dtype=int)
    if Z.shape[0] == 0:
        raise ValueError("batch is empty")
    pre = Z @ params.w1.T + params.b1
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ params.w2.T + params.b2
    loss, g_logits = _ce_loss_and_grad_logits(logits, y)
    g_w2 = g_logits.T @ hidden
    g_b2 = g_logits.sum(axis=0)
    g_hidden = g_logits @ params.w2
    g_pre = g_hidden * (pre > 0.0)
    g_w1 = g_pre.T @ Z
    g_b1 = g_pre.sum(axis=0)
    return loss, [g_w1, g_b1, g_w2, g_b2]


def _check_training_inputs(Z: np.ndarray, y: np.ndarray, num_classes: int) -> None:
    if Z.shape[0] == 0:
        raise ValueError("training set is empty")
    if Z.shape[0] != y.shape[0]:
        raise ValueError("features and labels are misaligned")
    present = np.unique(y)
    if present.size < num_classes:
        missing = sorted(set(range(num_classes)) - set(int(c) for c in present))
        warnings.warn(f"training labels miss classes {missing}", stacklevel=3)


def train_ffnn(
    Z_train: np.ndarray,
    y_train: Sequence[int],
    Z_val: np.ndarray,
    y_val: Sequence[int],
    config: TrainConfig,
    num_classes: int,
    hidden_dim: int = DEFAULT_HIDDEN,
    init: FFNNParams | None = None,
) -> tuple[FFNNParams, TrainingHistory]:
    """Train the feedforward head; returns the best-validation checkpoint."""
    if hidden_dim < 1:
        raise ValueError("hidden width must be at least 1")
    Z_train = np.asarray(Z_train, dtype=float)
    Z_val = np.asarray(Z_val, dtype=float)
    y_train = np.asarray(y_train, dtype=int)
    y_val = np.asarray(y_val, dtype=int)
    _check_training_inputs(Z_train, y_train, num_classes)
    if init is None:
        init = init_ffnn(Z_train.shape[1], hidden_dim, num_classes, config.seed)
    shape = FFNNParams(*[p.copy() for p in init.params()], seed=init.seed)

    def loss_and_grads(params, batch):
        current = FFNNParams(*params, seed=init.seed)
        return ffnn_gradients(current, Z_train[batch], y_train[batch])

    def val_loss(params):
        return ffnn_loss(FFNNParams(*params, seed=init.seed), Z_val, y_val)

    best, history = fit_minibatch_sgd(
        shape.params(),
        loss_and_grads,
        val_loss,
        Z_train.shape[0],
        config,
        decay_mask=[True, False, True, False],
    )
    return FFNNParams(*best, seed=init.seed), history


def lr_forward(head: LRHead, Z: np.ndarray) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    return Z @ head.w.T + head.b


def lr_predict(head: LRHead, z: Sequence[float] | np.ndarray) -> MetaPrediction:
    logits = lr_forward(head, np.asarray(z, dtype=float))[0]
    probs = softmax(logits)
    return MetaPrediction(logits=logits, probabilities=probs, label=int(np.argmax(probs)))


def lr_predict_batch(head: LRHead, Z: np.ndarray) -> np.ndarray:
    return np.argmax(lr_forward(head, Z), axis=1)


def train_lr_head(
    Z_train: np.ndarray,
    y_train: Sequence[int],
    Z_val: np.ndarray,
    y_val: Sequence[int],
    config: TrainConfig,
    num_classes: int,
) -> tuple[LRHead, TrainingHistory]:
    """Gradient-trained multinomial logistic head (deterministic zero init)."""
    Z_train = np.asarray(Z_train, dtype=float)
    Z_val = np.asarray(Z_val, dtype=float)
    y_train = np.asarray(y_train, dtype=int)
    y_val = np.asarray(y_val, dtype=int)
    _check_training_inputs(Z_train, y_train, num_classes)

    def loss_and_grads(params, batch):
        w, b = params
        Zb, yb = Z_train[batch], y_train[batch]
        logits = Zb @ w.T + b
        loss, g_logits = _ce_loss_and_grad_logits(logits, yb)
        return loss, [g_logits.T @ Zb, g_logits.sum(axis=0)]

    def val_loss(params):
        w, b = params
        logits = Z_val @ w.T + b
        logp = log_softmax(logits, axis=1)
        return float(-np.mean(logp[np.arange(len(y_val)), y_val]))

    init = [np.zeros((num_classes, Z_train.shape[1])), np.zeros(num_classes)]
    best, history = fit_minibatch_sgd(
        init, loss_and_grads, val_loss, Z_train.shape[0], config, decay_mask=[True, False]
    )
    return LRHead(w=best[0], b=best[1], seed=config.seed), history


def train_knn_head(Z: np.ndarray, labels: Sequence[int], k: int, num_classes: int) -> KNNHead:
    Z = np.asarray(Z, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > Z.shape[0]:
        raise ValueError(f"k={k} exceeds the training size {Z.shape[0]}")
    return KNNHead(Z=Z, labels=labels, k=k, num_classes=num_classes)


def knn_predict(head: KNNHead, z: Sequence[float] | np.ndarray) -> tuple[int, np.ndarray]:
    """Predicted class plus the per-class vote counts among the k neighbors.

    Equal distances rank by lower stored index; a class-count tie resolves to
    the lowest class index.
    """
    z = np.asarray(z, dtype=float)
    d2 = np.sum((head.Z - z) ** 2, axis=1)
    order = np.lexsort((np.arange(d2.size), d2))
    chosen = head.labels[order[: head.k]]
    counts = np.bincount(chosen, minlength=head.num_classes)
    return int(np.argmax(counts)), counts
