"""Exact attribution machinery for both ensemble levels.

At the aggregator level, Shapley values over the 2K expert-probability
features are computed by full coalition enumeration (exact: the efficiency,
null-player, symmetry and linearity axioms hold up to float rounding). At the
expert level, the linear heads admit an exact per-token decomposition whose
per-sentence totals form the attribution-mass statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import FormattedInput
from .experts import BinaryExpert, token_attributions
from .meta import FFNNParams, LRHead, ffnn_predict, lr_predict

MAX_ENUM_FEATURES = 16

ValueFunction = Callable[[np.ndarray], float]


@dataclass
class ShapleyReport:
    """Exact per-feature attributions of one aggregator output."""

    instance_id: str
    output_class: int
    baseline: np.ndarray
    phi: np.ndarray
    value_at_z: float
    value_at_baseline: float
    efficiency_residual: float


@dataclass(frozen=True)
class AttributionMass:
    """Summed token attributions of one expert on one instance.

    ``negative`` stores the magnitude of the negative side, so
    ``signed == positive - negative`` exactly.
    """

    instance_id: str
    class_index: int
    variant: str
    positive: float
    negative: float
    signed: float


@dataclass
class ExpertMassStats:
    class_index: int
    variant: str
    positive_mean: float
    positive_std: float
    negative_mean: float
    negative_std: float
    signed_mean: float
    signed_std: float


@dataclass
class MassStatistics:
    """Per-predicted-class mass statistics and signed-mass correlations.

    ``correlations`` is square over the expert order in ``experts``; entries
    are None where a constant signed-mass column makes Pearson undefined.
    Groups with fewer than two instances are flagged ``omitted`` and carry no
    statistics.
    """

    predicted_class: int
    instance_ids: tuple[str, ...]
    experts: list[ExpertMassStats]
    correlations: list[list[float | None]]
    undefined_pairs: list[tuple[int, int]]
    omitted: bool = False


def _as_value_fn(head, output_class: int | None) -> ValueFunction:
    if callable(head):
        return head
    if isinstance(head, FFNNParams):
        if output_class is None:
            raise ValueError("output_class is required for a network head")
        return lambda v: float(ffnn_predict(head, v).probabilities[output_class])
    if isinstance(head, LRHead):
        if output_class is None:
            raise ValueError("output_class is required for a logistic head")
        return lambda v: float(lr_predict(head, v).probabilities[output_class])
    raise TypeError(f"unsupported head type {type(head).__name__}")


def exact_shapley(
    head,
    z: Sequence[float] | np.ndarray,
    baseline: Sequence[float] | np.ndarray,
    output_class: int | None = None,
    instance_id: str = "",
) -> ShapleyReport:
    """Shapley values by exact enumeration over all feature coalitions.

    The coalition value v(S) evaluates the head's probability for the
    explained class on a vector taking coordinates in S from ``z`` and the
    rest from ``baseline``. ``head`` may also be a plain callable mapping a
    vector to a scalar, in which case it is used as v directly.
    """
    z = np.asarray(z, dtype=float)
    baseline = np.asarray(baseline, dtype=float)
    if z.shape != baseline.shape or z.ndim != 1:
        raise ValueError("z and baseline must be flat vectors of equal length")
    n = z.size
    if n > MAX_ENUM_FEATURES:
        raise ValueError(f"{n} features exceed the enumeration guard ({MAX_ENUM_FEATURES})")
    value = _as_value_fn(head, output_class)

    bits = np.arange(n)
    values = np.empty(1 << n)
    for mask in range(1 << n):
        members = (mask >> bits) & 1
        values[mask] = value(np.where(members == 1, z, baseline))

    # weight of a coalition of size s when adding one more player
    factor = [
        math.factorial(s) * math.factorial(n - s - 1) / math.factorial(n) for s in range(n)
    ]
    phi = np.zeros(n)
    for mask in range(1 << n):
        s = int(mask).bit_count()
        for f in range(n):
            bit = 1 << f
            if mask & bit:
                continue
            phi[f] += factor[s] * (values[mask | bit] - values[mask])

    full = float(values[(1 << n) - 1])
    empty = float(values[0])
    residual = abs(float(phi.sum()) - (full - empty))
    return ShapleyReport(
        instance_id=instance_id,
        output_class=output_class if output_class is not None else -1,
        baseline=baseline,
        phi=phi,
        value_at_z=full,
        value_at_baseline=empty,
        efficiency_residual=residual,
    )


def attribution_mass(expert: BinaryExpert, inp: FormattedInput, instance_id: str = "") -> AttributionMass:
    """Split one expert's token attributions into positive and negative mass."""
    positive = 0.0
    negative = 0.0
    for _tok, value in token_attributions(expert, inp):
        if value >= 0:
            positive += value
        else:
            negative -= value
    return AttributionMass(
        instance_id=instance_id,
        class_index=expert.target_class,
        variant=expert.variant,
        positive=positive,
        negative=negative,
        signed=positive - negative,
    )


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    # exact answers for constant columns (float means of constants drift)
    if np.all(values == values[0]):
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std())


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    # a constant column makes the coefficient undefined; test constancy
    # directly because float means of constants need not subtract to zero
    if np.all(x == x[0]) or np.all(y == y[0]):
        return None
    vx = x - x.mean()
    vy = y - y.mean()
    denom = math.sqrt(float(vx @ vx) * float(vy @ vy))
    if denom == 0.0:
        return None
    return float(vx @ vy) / denom


def mass_statistics(
    masses: Sequence[AttributionMass], predicted: Mapping[str, int]
) -> dict[int, MassStatistics]:
    """Group per-expert masses by the ensemble's predicted class.

    ``predicted`` maps instance ids to the ensemble label. Every instance must
    carry a mass for every expert appearing in the input. Within each group,
    means and stds are per expert and the correlation matrix pairs the signed
    masses of the experts (undefined where a column is constant).
    """
    expert_ids = sorted({(m.class_index, m.variant) for m in masses})
    by_key: dict[tuple[str, int, str], AttributionMass] = {}
    for m in masses:
        by_key[(m.instance_id, m.class_index, m.variant)] = m

    groups: dict[int, list[str]] = {}
    for instance_id in sorted({m.instance_id for m in masses}):
        if instance_id not in predicted:
            raise KeyError(f"no ensemble prediction for instance {instance_id!r}")
        groups.setdefault(predicted[instance_id], []).append(instance_id)

    out: dict[int, MassStatistics] = {}
    for label, ids in sorted(groups.items()):
        if len(ids) < 2:
            out[label] = MassStatistics(
                predicted_class=label,
                instance_ids=tuple(ids),
                experts=[],
                correlations=[],
                undefined_pairs=[],
                omitted=True,
            )
            continue
        columns = {}
        stats = []
        for class_index, variant in expert_ids:
            rows = []
            for instance_id in ids:
                m = by_key.get((instance_id, class_index, variant))
                if m is None:
                    raise KeyError(
                        f"missing mass for instance {instance_id!r}, expert ({class_index}, {variant})"
                    )
                rows.append(m)
            pos = np.array([m.positive for m in rows])
            neg = np.array([m.negative for m in rows])
            signed = np.array([m.signed for m in rows])
            columns[(class_index, variant)] = signed
            pos_mean, pos_std = _mean_std(pos)
            neg_mean, neg_std = _mean_std(neg)
            signed_mean, signed_std = _mean_std(signed)
            stats.append(
                ExpertMassStats(
                    class_index=class_index,
                    variant=variant,
                    positive_mean=pos_mean,
                    positive_std=pos_std,
                    negative_mean=neg_mean,
                    negative_std=neg_std,
                    signed_mean=signed_mean,
                    signed_std=signed_std,
                )
            )
        size = len(expert_ids)
        corr: list[list[float | None]] = [[None] * size for _ in range(size)]
        undefined = []
        for a in range(size):
            for b in range(size):
                r = _pearson(columns[expert_ids[a]], columns[expert_ids[b]])
                corr[a][b] = r
                if r is None and a <= b:
                    undefined.append((a, b))
        out[label] = MassStatistics(
            predicted_class=label,
            instance_ids=tuple(ids),
            experts=stats,
            correlations=corr,
            undefined_pairs=undefined,
        )
    return out


def explain_instance_report(
    bundle,
    section_title: str | None,
    context: str,
    threshold: float | None = None,
    instance_id: str = "",
) -> dict:
    """One JSON-ready explanation document for a single input.

    Contains each expert's positive probability, token attributions and
    masses, plus the aggregator probabilities, the predicted class and its
    CiTO property. When a threshold is given, the reliability verdict and the
    effective property (fallback when unreliable) are included as well.
    """
    from .corpus import CITO_FALLBACK_IRI, cito_for, format_text
    from .voting import assemble_z

    inp = format_text(section_title, context, bundle.setting)
    ws_fallback = bundle.setting == "WS" and not (section_title or "").strip()
    ordered = sorted(bundle.experts, key=lambda e: (e.target_class, e.variant != "domain"))
    z = assemble_z(ordered, inp)

    expert_blocks = []
    for slot, expert in enumerate(ordered):
        mass = attribution_mass(expert, inp, instance_id)
        expert_blocks.append(
            {
                "class_name": bundle.schema.classes[expert.target_class],
                "variant": expert.variant,
                "positive_probability": float(z[slot]),
                "attribution_mass": {
                    "positive": mass.positive,
                    "negative": mass.negative,
                    "signed": mass.signed,
                },
                "token_attributions": [[tok, val] for tok, val in token_attributions(expert, inp)],
            }
        )

    prediction = ffnn_predict(bundle.meta, z)
    predicted_name = bundle.schema.classes[prediction.label]
    report = {
        "instance_id": instance_id,
        "section_title": section_title,
        "context": context,
        "setting": bundle.setting,
        "ws_fallback": ws_fallback,
        "experts": expert_blocks,
        "meta_probabilities": {
            bundle.schema.classes[j]: float(p) for j, p in enumerate(prediction.probabilities)
        },
        "predicted_class": predicted_name,
        "cito_iri": cito_for(bundle.schema, prediction.label),
    }
    if threshold is not None:
        reliable = float(np.max(prediction.probabilities)) > threshold
        report["threshold"] = threshold
        report["reliable"] = reliable
        report["effective_cito_iri"] = report["cito_iri"] if reliable else CITO_FALLBACK_IRI
    return report


def mass_statistics_csv(stats: Mapping[int, MassStatistics], class_names: Sequence[str]) -> str:
    """Aggregate table: one row per (predicted class, expert)."""
    lines = [
        "predicted_class,expert_class,expert_variant,"
        "positive_mean,positive_std,negative_mean,negative_std,signed_mean,signed_std"
    ]
    for label in sorted(stats):
        group = stats[label]
        if group.omitted:
            continue
        for s in group.experts:
            lines.append(
                f"{class_names[label]},{class_names[s.class_index]},{s.variant},"
                f"{s.positive_mean!r},{s.positive_std!r},{s.negative_mean!r},"
                f"{s.negative_std!r},{s.signed_mean!r},{s.signed_std!r}"
            )
    return "\n".join(lines) + "\n"


def correlation_csv(group: MassStatistics, class_names: Sequence[str]) -> str:
    """One square signed-mass correlation matrix as CSV (empty cell = undefined)."""
    headers = [f"{class_names[s.class_index]}:{s.variant}" for s in group.experts]
    lines = ["expert," + ",".join(headers)]
    for name, row in zip(headers, group.correlations):
        cells = ["" if r is None else repr(r) for r in row]
        lines.append(name + "," + ",".join(cells))
    return "\n".join(lines) + "\n"
