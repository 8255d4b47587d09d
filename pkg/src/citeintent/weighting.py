"""Supervised non-neural aggregation: per-class optimal weights and per-class
linear stacking heads, both fitted on the validation split.

The weighting route solves, for each class, the intercept-free least-squares
problem mapping the class's two expert probabilities to its one-vs-all label,
then softmax-normalizes the solution so the pair is positive and sums to 1.
The stacking route fits the same regression with an intercept and turns the
per-class scores into probabilities with a softmax across classes.

Both solvers use closed-form normal equations; a rank-deficient design falls
back to the minimum-norm pseudoinverse solution and flags the fit degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numerics import softmax
from .voting import avg_vote, majority_vote, max_vote, validate_z


@dataclass(frozen=True)
class ClassWeights:
    """Softmax-normalized expert weights (domain, general) for one class."""

    class_index: int
    weights: np.ndarray
    raw_weights: np.ndarray
    degenerate: bool = False

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (2,):
            raise ValueError("ClassWeights needs exactly two entries")
        if np.any(w <= 0) or abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must be a softmax image: positive, summing to 1")


@dataclass(frozen=True)
class StackingHead:
    """Per-class linear regression (two coefficients plus intercept)."""

    class_index: int
    theta: np.ndarray
    intercept: float
    degenerate: bool = False

    def __post_init__(self) -> None:
        t = np.asarray(self.theta, dtype=float)
        if t.shape != (2,):
            raise ValueError("StackingHead needs exactly two coefficients")
        if not (np.all(np.isfinite(t)) and np.isfinite(self.intercept)):
            raise ValueError("coefficients must be finite")


def class_subvectors(Z: np.ndarray, class_index: int) -> np.ndarray:
    """The (n, 2) slice of a z matrix belonging to one class."""
    Z = np.asarray(Z, dtype=float)
    return Z[:, 2 * class_index : 2 * class_index + 2]


def fit_geometric_weights(Zj: np.ndarray, k: np.ndarray, class_index: int) -> ClassWeights:
    """Fit the intercept-free optimal pair for one class and normalize it.

    Minimizes sum((<z_i, w> - k_i)^2) in closed form via the normal equations;
    a numerically rank-deficient design is solved with the pseudoinverse
    (minimum-norm solution) and flagged degenerate.
    """
    Zj = np.asarray(Zj, dtype=float)
    k = np.asarray(k, dtype=float)
    if Zj.ndim != 2 or Zj.shape[1] != 2:
        raise ValueError("Zj must be (n, 2)")
    if Zj.shape[0] != k.shape[0] or Zj.shape[0] < 2:
        raise ValueError("need at least 2 aligned validation instances")
    degenerate = np.linalg.matrix_rank(Zj) < 2
    if degenerate:
        w_raw = np.linalg.pinv(Zj) @ k
    else:
        w_raw = np.linalg.solve(Zj.T @ Zj, Zj.T @ k)
    return ClassWeights(
        class_index=class_index,
        weights=softmax(w_raw),
        raw_weights=w_raw,
        degenerate=bool(degenerate),
    )


def fit_stackingc(Zj: np.ndarray, k: np.ndarray, class_index: int) -> StackingHead:
    """Ordinary least squares with intercept for one class's stacking head."""
    Zj = np.asarray(Zj, dtype=float)
    k = np.asarray(k, dtype=float)
    if Zj.ndim != 2 or Zj.shape[1] != 2:
        raise ValueError("Zj must be (n, 2)")
    if Zj.shape[0] != k.shape[0] or Zj.shape[0] < 3:
        raise ValueError("need at least 3 aligned validation instances")
    A = np.hstack([Zj, np.ones((Zj.shape[0], 1))])
    degenerate = np.linalg.matrix_rank(A) < 3
    if degenerate:
        coef = np.linalg.pinv(A) @ k
    else:
        coef = np.linalg.solve(A.T @ A, A.T @ k)
    return StackingHead(
        class_index=class_index,
        theta=coef[:2],
        intercept=float(coef[2]),
        degenerate=bool(degenerate),
    )


def _ova_targets(labels: np.ndarray, class_index: int) -> np.ndarray:
    return (np.asarray(labels) == class_index).astype(float)


def fit_all_geometric(Z: np.ndarray, labels: Sequence[int], num_classes: int) -> list[ClassWeights]:
    return [
        fit_geometric_weights(class_subvectors(Z, j), _ova_targets(np.asarray(labels), j), j)
        for j in range(num_classes)
    ]


def fit_all_stackingc(Z: np.ndarray, labels: Sequence[int], num_classes: int) -> list[StackingHead]:
    return [
        fit_stackingc(class_subvectors(Z, j), _ova_targets(np.asarray(labels), j), j)
        for j in range(num_classes)
    ]


def _check_weights(z: np.ndarray, weights: Sequence[ClassWeights]) -> None:
    num_classes = z.size // 2
    if len(weights) != num_classes:
        raise ValueError(f"need one ClassWeights per class ({num_classes}), got {len(weights)}")
    for j, cw in enumerate(weights):
        if cw.class_index != j:
            raise ValueError(f"weights out of order at position {j}: class {cw.class_index}")


def apply_weights(z: Sequence[float] | np.ndarray, weights: Sequence[ClassWeights]) -> np.ndarray:
    """Per-class weighted scores <z_j, w_j>; stays in [0, 1] because the
    weights are a convex combination."""
    arr = validate_z(z)
    _check_weights(arr, weights)
    out = np.empty(arr.size // 2)
    for j, cw in enumerate(weights):
        out[j] = cw.weights[0] * arr[2 * j] + cw.weights[1] * arr[2 * j + 1]
    return out


def reweight_slots(z: Sequence[float] | np.ndarray, weights: Sequence[ClassWeights]) -> np.ndarray:
    """Scale each slot by its class weight; voting rules then run on the result."""
    arr = validate_z(z)
    _check_weights(arr, weights)
    out = arr.copy()
    for j, cw in enumerate(weights):
        out[2 * j] *= cw.weights[0]
        out[2 * j + 1] *= cw.weights[1]
    return out


def weighted_max_vote(z, weights: Sequence[ClassWeights]) -> int:
    return max_vote(reweight_slots(z, weights))


def weighted_avg_vote(z, weights: Sequence[ClassWeights]) -> tuple[np.ndarray, int]:
    return avg_vote(reweight_slots(z, weights))


def weighted_majority_vote(z, weights: Sequence[ClassWeights], gamma: float = 0.5) -> int:
    # The threshold applies to the reweighted scores; thresholding the raw
    # probabilities first would be the other defensible reading.
    return majority_vote(reweight_slots(z, weights), gamma)


def stackingc_predict(
    z: Sequence[float] | np.ndarray, heads: Sequence[StackingHead]
) -> tuple[np.ndarray, int]:
    """Softmax over per-class head scores; argmax with lowest-index tie-break."""
    arr = validate_z(z)
    num_classes = arr.size // 2
    if len(heads) != num_classes:
        raise ValueError(f"need one StackingHead per class ({num_classes}), got {len(heads)}")
    logits = np.empty(num_classes)
    for j, head in enumerate(heads):
        if head.class_index != j:
            raise ValueError(f"heads out of order at position {j}: class {head.class_index}")
        logits[j] = head.theta[0] * arr[2 * j] + head.theta[1] * arr[2 * j + 1] + head.intercept
    probs = softmax(logits)
    return probs, int(np.argmax(probs))


def residual_sum_of_squares(Zj: np.ndarray, k: np.ndarray, w: np.ndarray) -> float:
    r = np.asarray(Zj) @ np.asarray(w) - np.asarray(k)
    return float(r @ r)


def weighting_diagnostics(Z: np.ndarray, labels: Sequence[int], num_classes: int) -> dict:
    """Per-class fit report: weights, stacking coefficients, residuals, flags.

    JSON-ready; meant to be stored alongside the bundles the fits belong to.
    """
    Z = np.asarray(Z, dtype=float)
    labels = np.asarray(labels)
    out: dict = {"num_classes": num_classes, "per_class": []}
    for j in range(num_classes):
        Zj = class_subvectors(Z, j)
        k = _ova_targets(labels, j)
        cw = fit_geometric_weights(Zj, k, j)
        head = fit_stackingc(Zj, k, j)
        stacked = np.hstack([Zj, np.ones((Zj.shape[0], 1))])
        out["per_class"].append(
            {
                "class_index": j,
                "weights": [float(v) for v in cw.weights],
                "raw_weights": [float(v) for v in cw.raw_weights],
                "weights_degenerate": cw.degenerate,
                "weights_rss": residual_sum_of_squares(Zj, k, cw.raw_weights),
                "theta": [float(v) for v in head.theta],
                "intercept": head.intercept,
                "stacking_degenerate": head.degenerate,
                "stacking_rss": residual_sum_of_squares(
                    stacked, k, np.append(head.theta, head.intercept)
                ),
            }
        )
    return out
