"""End-to-end ensemble assembly: train all experts, extract z-vectors, train
the meta head, and package everything as a serializable bundle.

Each training job (one expert, or the meta head) derives its own seed from the
base seed and its identity, so jobs are isolated: running them in parallel or
in any order cannot change results. Bundle files contain no timestamps, which
keeps repeated training runs byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import CitationInstance, LabelSchema, format_input, ova_binarize, split_of
from .experts import (
    VARIANTS,
    BinaryExpert,
    HashedTextFeaturizer,
    positive_probabilities,
    train_expert,
)
from .meta import DEFAULT_HIDDEN, FFNNParams, train_ffnn
from .training import TrainConfig, TrainingHistory, write_training_log

FORMAT_VERSION = 1


def canonical_dumps(obj) -> str:
    """The one JSON serialization used for bundles and service bodies."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def derive_seed(base_seed: int, *parts) -> int:
    """Stable per-job seed so independent jobs stay isolated."""
    key = "/".join([str(base_seed), *(str(p) for p in parts)])
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "big")


@dataclass
class EnsembleBundle:
    """Everything the service needs: schema, 2K experts, meta head, baseline."""

    schema: LabelSchema
    setting: str
    seed: int
    experts: list[BinaryExpert]  # class-major order, domain slot first
    meta: FFNNParams
    baseline_z: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return self.schema.num_classes


@dataclass
class TrainDetails:
    expert_histories: dict[tuple[int, str], TrainingHistory]
    meta_history: TrainingHistory
    z_train: np.ndarray
    y_train: np.ndarray
    z_val: np.ndarray
    y_val: np.ndarray


def extract_z(
    experts: Sequence[BinaryExpert],
    instances: Sequence[CitationInstance],
    setting: str,
) -> tuple[np.ndarray, np.ndarray]:
    """Run every expert over the instances; returns (Z, labels).

    Feature matrices are computed once per distinct featurizer, so the two
    experts of each variant pair share tokenization work.
    """
    texts = [format_input(inst, setting).text for inst in instances]
    labels = np.array([inst.label for inst in instances], dtype=int)
    matrices: dict[int, object] = {}
    num_classes = len(experts) // 2
    Z = np.empty((len(instances), 2 * num_classes))
    ordered = {(e.target_class, e.variant): e for e in experts}
    for j in range(num_classes):
        for offset, variant in enumerate(VARIANTS):
            expert = ordered.get((j, variant))
            if expert is None:
                raise ValueError(f"missing expert for class {j} variant {variant!r}")
            fid = id(expert.featurizer)
            if fid not in matrices:
                matrices[fid] = expert.featurizer.matrix(texts)
            Z[:, 2 * j + offset] = positive_probabilities(expert, matrices[fid])
    return Z, labels


def train_ensemble(
    instances: Sequence[CitationInstance],
    schema: LabelSchema,
    setting: str,
    config: TrainConfig | None = None,
    hidden_dim: int = DEFAULT_HIDDEN,
    log_dir: str | Path | None = None,
) -> tuple[EnsembleBundle, TrainDetails]:
    """Train the full ensemble on the instances' train/val splits.

    The meta head is fitted on z-vectors that the freshly trained experts
    produce over the train split itself and validated on the val split; there
    is no out-of-fold pass, which is a known leakage compromise of this
    stacking scheme.
    """
    config = config or TrainConfig()
    train = split_of(instances, "train")
    val = split_of(instances, "val")
    if not train or not val:
        raise ValueError("need non-empty train and val splits")

    train_texts = [format_input(inst, setting).text for inst in train]
    val_texts = [format_input(inst, setting).text for inst in val]
    featurizers = {v: HashedTextFeaturizer(v).fit(train_texts) for v in VARIANTS}
    train_matrices = {v: featurizers[v].matrix(train_texts) for v in VARIANTS}
    val_matrices = {v: featurizers[v].matrix(val_texts) for v in VARIANTS}

    log_dir = Path(log_dir) if log_dir is not None else None
    if log_dir is not None:
        log_dir.mkdir(parents=True, exist_ok=True)

    experts: list[BinaryExpert] = []
    histories: dict[tuple[int, str], TrainingHistory] = {}
    for j in range(schema.num_classes):
        bd_train = ova_binarize(train, j, setting, schema.num_classes)
        bd_val = ova_binarize(val, j, setting, schema.num_classes)
        for variant in VARIANTS:
            job_config = replace(config, seed=derive_seed(config.seed, "expert", j, variant))
            expert, history = train_expert(
                bd_train,
                bd_val,
                featurizers[variant],
                job_config,
                train_matrix=train_matrices[variant],
                val_matrix=val_matrices[variant],
            )
            experts.append(expert)
            histories[(j, variant)] = history
            if log_dir is not None:
                write_training_log(history, log_dir / f"expert_c{j}_{variant}.csv")

    z_train, y_train = extract_z(experts, train, setting)
    z_val, y_val = extract_z(experts, val, setting)

    meta_config = replace(config, seed=derive_seed(config.seed, "meta"))
    meta, meta_history = train_ffnn(
        z_train, y_train, z_val, y_val, meta_config, schema.num_classes, hidden_dim=hidden_dim
    )
    if log_dir is not None:
        write_training_log(meta_history, log_dir / "meta_ffnn.csv")

    bundle = EnsembleBundle(
        schema=schema,
        setting=setting,
        seed=config.seed,
        experts=experts,
        meta=meta,
        baseline_z=z_train.mean(axis=0),
        metadata={
            "dataset": schema.dataset_name,
            "hidden_dim": hidden_dim,
            "num_experts": len(experts),
            "train_size": len(train),
            "val_size": len(val),
        },
    )
    details = TrainDetails(
        expert_histories=histories,
        meta_history=meta_history,
        z_train=z_train,
        y_train=y_train,
        z_val=z_val,
        y_val=y_val,
    )
    return bundle, details


def _featurizer_to_dict(f: HashedTextFeaturizer) -> dict:
    return {
        "variant": f.variant,
        "dimension": f.dimension,
        "fitted": f.fitted,
        "doc_count": f.doc_count,
        "df": {str(idx): count for idx, count in f.df.items()},
    }


def _featurizer_from_dict(raw: dict) -> HashedTextFeaturizer:
    f = HashedTextFeaturizer(raw["variant"], int(raw["dimension"]))
    f.fitted = bool(raw["fitted"])
    f.doc_count = int(raw["doc_count"])
    f.df = {int(idx): int(count) for idx, count in raw["df"].items()}
    return f


def _expert_to_dict(expert: BinaryExpert, featurizer_key: str) -> dict:
    nz = np.flatnonzero(expert.weights)
    return {
        "target_class": expert.target_class,
        "variant": expert.variant,
        "featurizer": featurizer_key,
        "weights": {
            "dimension": int(expert.weights.size),
            "indices": [int(i) for i in nz],
            "values": [float(expert.weights[i]) for i in nz],
        },
        "bias": expert.bias,
        "trained": expert.trained,
        "seed": expert.seed,
        "best_val_loss": expert.best_val_loss,
    }


def _expert_from_dict(raw: dict, featurizers: dict[str, HashedTextFeaturizer]) -> BinaryExpert:
    weights = np.zeros(int(raw["weights"]["dimension"]))
    for idx, value in zip(raw["weights"]["indices"], raw["weights"]["values"]):
        weights[int(idx)] = float(value)
    return BinaryExpert(
        target_class=int(raw["target_class"]),
        variant=raw["variant"],
        featurizer=featurizers[raw["featurizer"]],
        weights=weights,
        bias=float(raw["bias"]),
        trained=bool(raw["trained"]),
        seed=int(raw["seed"]),
        best_val_loss=raw["best_val_loss"],
    )


def bundle_to_dict(bundle: EnsembleBundle) -> dict:
    featurizers = {}
    expert_dicts = []
    for expert in bundle.experts:
        key = expert.variant
        if key not in featurizers:
            featurizers[key] = _featurizer_to_dict(expert.featurizer)
        expert_dicts.append(_expert_to_dict(expert, key))
    return {
        "format_version": FORMAT_VERSION,
        "kind": "ensemble-bundle",
        "schema": {
            "dataset_name": bundle.schema.dataset_name,
            "classes": list(bundle.schema.classes),
            "cito_iris": dict(bundle.schema.cito_iris),
        },
        "setting": bundle.setting,
        "seed": bundle.seed,
        "featurizers": featurizers,
        "experts": expert_dicts,
        "meta": {
            "kind": "ffnn",
            "w1": bundle.meta.w1.tolist(),
            "b1": bundle.meta.b1.tolist(),
            "w2": bundle.meta.w2.tolist(),
            "b2": bundle.meta.b2.tolist(),
            "seed": bundle.meta.seed,
        },
        "baseline_z": [float(v) for v in bundle.baseline_z],
        "metadata": bundle.metadata,
    }


def bundle_from_dict(raw: dict) -> EnsembleBundle:
    if raw.get("kind") != "ensemble-bundle":
        raise ValueError("not an ensemble bundle")
    if raw.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported bundle format version {raw.get('format_version')!r}")
    schema = LabelSchema(
        dataset_name=raw["schema"]["dataset_name"],
        classes=tuple(raw["schema"]["classes"]),
        cito_iris=dict(raw["schema"]["cito_iris"]),
    )
    featurizers = {key: _featurizer_from_dict(val) for key, val in raw["featurizers"].items()}
    experts = [_expert_from_dict(e, featurizers) for e in raw["experts"]]
    meta = FFNNParams(
        w1=np.asarray(raw["meta"]["w1"], dtype=float),
        b1=np.asarray(raw["meta"]["b1"], dtype=float),
        w2=np.asarray(raw["meta"]["w2"], dtype=float),
        b2=np.asarray(raw["meta"]["b2"], dtype=float),
        seed=int(raw["meta"]["seed"]),
    )
    return EnsembleBundle(
        schema=schema,
        setting=raw["setting"],
        seed=int(raw["seed"]),
        experts=experts,
        meta=meta,
        baseline_z=np.asarray(raw["baseline_z"], dtype=float),
        metadata=dict(raw["metadata"]),
    )


def save_bundle(bundle: EnsembleBundle, path: str | Path) -> None:
    Path(path).write_text(canonical_dumps(bundle_to_dict(bundle)) + "\n", encoding="utf-8")


def load_bundle(path: str | Path) -> EnsembleBundle:
    with open(path, encoding="utf-8") as fh:
        return bundle_from_dict(json.load(fh))


def save_expert_bundle(
    expert: BinaryExpert, path: str | Path, dataset: str, setting: str
) -> None:
    """Serialize one expert on its own (featurizer rules, weights, metadata)."""
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": "expert-bundle",
        "dataset": dataset,
        "setting": setting,
        "featurizer_rules": _featurizer_to_dict(expert.featurizer),
        "expert": _expert_to_dict(expert, expert.variant),
    }
    Path(path).write_text(canonical_dumps(payload) + "\n", encoding="utf-8")


def load_expert_bundle(path: str | Path) -> tuple[BinaryExpert, dict]:
    """Load a single-expert bundle; returns (expert, metadata)."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if raw.get("kind") != "expert-bundle":
        raise ValueError("not an expert bundle")
    if raw.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported bundle format version {raw.get('format_version')!r}")
    featurizer = _featurizer_from_dict(raw["featurizer_rules"])
    expert = _expert_from_dict(raw["expert"], {raw["expert"]["featurizer"]: featurizer})
    return expert, {"dataset": raw["dataset"], "setting": raw["setting"]}
