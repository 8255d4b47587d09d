"""Shared test utilities: independent brute-force oracles and crafted bundles.

The voting oracles below are deliberately written as plain Python loops,
separate from the package's vectorized implementations, so the two routes can
be compared label-for-label.
"""

from __future__ import annotations

import math

import numpy as np

from citeintent.corpus import SCICITE, LabelSchema
from citeintent.experts import BinaryExpert, HashedTextFeaturizer, VARIANTS
from citeintent.meta import FFNNParams
from citeintent.pipeline import EnsembleBundle


def brute_max_vote(z) -> int:
    best = 0
    for i in range(1, len(z)):
        if z[i] > z[best]:
            best = i
    return best // 2


def brute_avg_vote(z) -> tuple[list[float], int]:
    consensus = []
    for j in range(len(z) // 2):
        consensus.append((z[2 * j] + z[2 * j + 1]) / 2.0)
    best = 0
    for j in range(1, len(consensus)):
        if consensus[j] > consensus[best]:
            best = j
    return consensus, best


def brute_majority_vote(z, gamma=0.5) -> int:
    tallies = []
    for j in range(len(z) // 2):
        count = 0
        if z[2 * j] >= gamma:
            count += 1
        if z[2 * j + 1] >= gamma:
            count += 1
        tallies.append(count)
    top = max(tallies)
    tied = [j for j, t in enumerate(tallies) if t == top]
    if len(tied) == 1:
        return tied[0]
    consensus, _ = brute_avg_vote(z)
    best = tied[0]
    for j in tied[1:]:
        if consensus[j] > consensus[best]:
            best = j
    return best


def brute_reweight(z, weight_pairs) -> list[float]:
    out = []
    for j in range(len(z) // 2):
        out.append(z[2 * j] * weight_pairs[j][0])
        out.append(z[2 * j + 1] * weight_pairs[j][1])
    return out


def softmax_pair(a: float, b: float) -> tuple[float, float]:
    m = max(a, b)
    ea, eb = math.exp(a - m), math.exp(b - m)
    return ea / (ea + eb), eb / (ea + eb)


def fixed_probability_experts(
    slot_probs: list[float], schema: LabelSchema = SCICITE
) -> list[BinaryExpert]:
    """Experts with zero weights whose biases pin each slot's positive probability."""
    assert len(slot_probs) == 2 * schema.num_classes
    featurizers = {v: HashedTextFeaturizer(v, dimension=64).fit(["placeholder text"]) for v in VARIANTS}
    experts = []
    for j in range(schema.num_classes):
        for offset, variant in enumerate(VARIANTS):
            p = slot_probs[2 * j + offset]
            experts.append(
                BinaryExpert(
                    target_class=j,
                    variant=variant,
                    featurizer=featurizers[variant],
                    weights=np.zeros(64),
                    bias=math.log(p / (1.0 - p)),
                    trained=True,
                )
            )
    return experts


def fixed_probability_bundle(
    meta_probs: list[float],
    setting: str = "WS",
    schema: LabelSchema = SCICITE,
    slot_probs: list[float] | None = None,
) -> EnsembleBundle:
    """A bundle whose meta head emits fixed probabilities regardless of input."""
    K = schema.num_classes
    if slot_probs is None:
        slot_probs = [0.30 + 0.05 * i for i in range(2 * K)]
    meta = FFNNParams(
        w1=np.zeros((4, 2 * K)),
        b1=np.zeros(4),
        w2=np.zeros((K, 4)),
        b2=np.log(np.asarray(meta_probs, dtype=float)),
        seed=0,
    )
    return EnsembleBundle(
        schema=schema,
        setting=setting,
        seed=0,
        experts=fixed_probability_experts(slot_probs, schema),
        meta=meta,
        baseline_z=np.full(2 * K, 0.5),
        metadata={"dataset": schema.dataset_name, "crafted": True},
    )
