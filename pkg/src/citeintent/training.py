"""Mini-batch gradient training with fine-grained validation checkpoints.

The loop evaluates validation loss every ``eval_every`` batches, keeps the
best-so-far parameter snapshot, reduces the learning rate on validation-loss
plateaus, and stops early after ``patience`` evaluations without improvement.
Ties with the current best do not count as improvement. Weight decay is
decoupled from the gradient step and applied only to parameters whose decay
mask is set (biases are excluded by the callers).

Everything is bit-deterministic given (seed, config, data).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Params = list[np.ndarray]
LossAndGrads = Callable[[Params, np.ndarray], tuple[float, Params]]
ValLoss = Callable[[Params], float]


@dataclass
class TrainConfig:
    """Hyperparameters of the fine-grained training loop.

    The defaults target the package's linear reference experts. A
    transformer-backed expert plugin would instead document learning_rate 2e-5
    with the same weight_decay 0.01 and batch_size 32.
    """

    learning_rate: float = 0.1
    weight_decay: float = 0.01
    batch_size: int = 32
    eval_every: int = 10
    patience: int = 50
    plateau_factor: float = 0.5
    plateau_patience: int = 10
    max_epochs: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if self.batch_size < 1 or self.eval_every < 1 or self.patience < 1:
            raise ValueError("batch_size, eval_every and patience must all be >= 1")
        if not 0 < self.plateau_factor <= 1 or self.plateau_patience < 1:
            raise ValueError("plateau scheduler needs factor in (0, 1] and patience >= 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be non-negative")


@dataclass
class Checkpoint:
    """Best-so-far validation state at one evaluation step."""

    val_loss: float
    eval_index: int
    batches_seen: int
    params: Params

    def copy_params(self) -> Params:
        return [p.copy() for p in self.params]


@dataclass
class EvalRecord:
    eval_index: int
    batches_seen: int
    val_loss: float
    learning_rate: float
    improved: bool


@dataclass
class TrainingHistory:
    evals: list[EvalRecord] = field(default_factory=list)
    checkpoints: list[Checkpoint] = field(default_factory=list)
    stopped_early: bool = False
    epochs_run: int = 0

    @property
    def best(self) -> Checkpoint:
        return self.checkpoints[-1]

    def best_losses(self) -> list[float]:
        return [c.val_loss for c in self.checkpoints]


def sgd_step(params: Params, grads: Params, lr: float, weight_decay: float, decay_mask: Sequence[bool]) -> None:
    """One in-place step: p <- p - lr*g - lr*wd*p, decay skipped where masked off."""
    for p, g, decay in zip(params, grads, decay_mask):
        update = lr * g
        if decay and weight_decay:
            update = update + lr * weight_decay * p
        p -= update


def fit_minibatch_sgd(
    init_params: Params,
    loss_and_grads: LossAndGrads,
    val_loss: ValLoss,
    n_train: int,
    config: TrainConfig,
    decay_mask: Sequence[bool],
) -> tuple[Params, TrainingHistory]:
    """Run the loop and return (best-checkpoint parameters, history).

    ``loss_and_grads`` receives the current parameters and the index array of
    one shuffled batch. An evaluation at step 0 seeds the first checkpoint, so
    the returned parameters are always the best validated state, never the
    final one.
    """
    if n_train < 1:
        raise ValueError("empty training set")
    if len(init_params) != len(decay_mask):
        raise ValueError("decay_mask must align with params")

    rng = np.random.default_rng(config.seed)
    params = [np.array(p, dtype=float, copy=True) for p in init_params]
    lr = config.learning_rate

    history = TrainingHistory()
    best = Checkpoint(val_loss(params), 0, 0, [p.copy() for p in params])
    history.checkpoints.append(best)
    history.evals.append(EvalRecord(0, 0, best.val_loss, lr, True))

    evals_without_improvement = 0
    plateau_counter = 0
    batches_seen = 0
    eval_index = 0
    stop = False

    for epoch in range(config.max_epochs):
        order = rng.permutation(n_train)
        for start in range(0, n_train, config.batch_size):
            batch = order[start : start + config.batch_size]
            _, grads = loss_and_grads(params, batch)
            sgd_step(params, grads, lr, config.weight_decay, decay_mask)
            batches_seen += 1
            if batches_seen % config.eval_every != 0:
                continue
            eval_index += 1
            current = val_loss(params)
            improved = current < best.val_loss
            if improved:
                best = Checkpoint(current, eval_index, batches_seen, [p.copy() for p in params])
                history.checkpoints.append(best)
                evals_without_improvement = 0
                plateau_counter = 0
            else:
                evals_without_improvement += 1
                plateau_counter += 1
                if plateau_counter >= config.plateau_patience:
                    lr *= config.plateau_factor
                    plateau_counter = 0
            history.evals.append(EvalRecord(eval_index, batches_seen, current, lr, improved))
            if evals_without_improvement >= config.patience:
                stop = True
                break
        history.epochs_run = epoch + 1
        if stop:
            break

    history.stopped_early = stop
    return best.copy_params(), history


def write_training_log(history: TrainingHistory, path) -> None:
    """Dump every evaluation step as CSV (step, batches, val loss, lr, improved)."""
    lines = ["eval_index,batches_seen,val_loss,learning_rate,improved"]
    for rec in history.evals:
        lines.append(
            f"{rec.eval_index},{rec.batches_seen},{rec.val_loss!r},{rec.learning_rate!r},{int(rec.improved)}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
