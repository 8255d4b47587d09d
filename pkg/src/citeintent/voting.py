"""Probability vectors from the expert layer and the unsupervised voting rules.

A z-vector concatenates the positive probabilities of all experts for one
instance, class-major: slot 2j holds class j's domain-variant probability and
slot 2j+1 its general-variant probability. All argmax ties break toward the
lowest class index, and within a class toward the domain slot; numpy's
first-maximum argmax gives exactly that under this layout.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import FormattedInput
from .experts import VARIANTS, BinaryExpert, predict


def validate_z(z: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.asarray(z, dtype=float)
    if arr.ndim != 1 or arr.size < 4 or arr.size % 2 != 0:
        raise ValueError(f"z must be a flat vector of even length >= 4, got shape {arr.shape}")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("z entries must lie in [0, 1]")
    return arr


def assemble_z(experts: Sequence[BinaryExpert], inp: FormattedInput) -> np.ndarray:
    """Concatenate all experts' positive probabilities in the fixed layout.

    Exactly one trained expert per (class, variant) pair is required; a
    missing or duplicated slot is an error, never a default value.
    """
    if not experts or len(experts) % 2 != 0:
        raise ValueError("need exactly two experts (domain and general) per class")
    num_classes = len(experts) // 2
    slots: dict[tuple[int, str], BinaryExpert] = {}
    for expert in experts:
        key = (expert.target_class, expert.variant)
        if key in slots:
            raise ValueError(f"duplicate expert for class {key[0]} variant {key[1]!r}")
        slots[key] = expert
    z = np.empty(2 * num_classes)
    for j in range(num_classes):
        for offset, variant in enumerate(VARIANTS):
            expert = slots.get((j, variant))
            if expert is None:
                raise ValueError(f"missing expert for class {j} variant {variant!r}")
            z[2 * j + offset] = predict(expert, inp)[1]
    return z


def max_vote(z: Sequence[float] | np.ndarray) -> int:
    """Class of the globally highest positive probability over all slots."""
    arr = validate_z(z)
    return int(np.argmax(arr)) // 2


def avg_vote(z: Sequence[float] | np.ndarray) -> tuple[np.ndarray, int]:
    """Per-class consensus (mean of the two slots) and its argmax class."""
    arr = validate_z(z)
    consensus = (arr[0::2] + arr[1::2]) / 2.0
    return consensus, int(np.argmax(consensus))


def majority_vote(z: Sequence[float] | np.ndarray, gamma: float = 0.5) -> int:
    """Thresholded voting: each slot votes for its class when >= gamma.

    A unique top tally wins; tied top classes are resolved by average voting
    restricted to the tied set (when no slot votes, every class ties at zero
    and the consensus over all classes decides).
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    arr = validate_z(z)
    votes = (arr >= gamma).astype(int)
    tally = votes[0::2] + votes[1::2]
    tied = np.flatnonzero(tally == tally.max())
    if tied.size == 1:
        return int(tied[0])
    consensus = (arr[0::2] + arr[1::2]) / 2.0
    return int(tied[int(np.argmax(consensus[tied]))])


def z_column_names(num_classes: int) -> list[str]:
    names = []
    for j in range(num_classes):
        for variant in VARIANTS:
            names.append(f"z{j}_{variant}")
    return names


def save_z_matrix(path: str | Path, Z: np.ndarray, labels: Sequence[int]) -> None:
    """Cache z-vectors as CSV: one row per instance, 2K probability columns, then the label."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != len(labels):
        raise ValueError("Z must be (n_instances, 2K) aligned with labels")
    num_classes = Z.shape[1] // 2
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(z_column_names(num_classes) + ["label"])
        for row, label in zip(Z, labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def load_z_matrix(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Load a cached z matrix; returns (Z, labels)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise ValueError("z cache must end with a 'label' column")
        width = len(header) - 1
        if width < 4 or width % 2 != 0:
            raise ValueError("z cache must hold an even number (>= 4) of probability columns")
        rows, labels = [], []
        for row in reader:
            if not row:
                continue
            rows.append([float(v) for v in row[:width]])
            labels.append(int(row[width]))
    return np.asarray(rows, dtype=float), np.asarray(labels, dtype=int)
