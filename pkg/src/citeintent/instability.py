"""Multi-run harness quantifying run-to-run variability of the full pipeline.

Every run retrains everything (experts, z extraction, meta head) under its
own seed and evaluates on the test split. The training here is deterministic,
so identical seeds give a standard deviation of exactly zero; spreads appear
only across distinct seeds. Standard deviations are population ones (ddof 0).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .corpus import CitationInstance, LabelSchema, split_of
from .meta import DEFAULT_HIDDEN, ffnn_predict_batch
from .metrics import confusion, metrics
from .pipeline import extract_z, train_ensemble
from .training import TrainConfig


@dataclass(frozen=True)
class RunResult:
    seed: int
    accuracy: float
    macro_f1: float
    expert_val_losses: dict[tuple[int, str], float]
    meta_val_loss: float


@dataclass
class InstabilityReport:
    runs: list[RunResult]
    mean_accuracy: float
    std_accuracy: float
    mean_macro_f1: float
    std_macro_f1: float
    partial: bool = False
    failure: str | None = None


def run_pipeline_once(
    instances: Sequence[CitationInstance],
    schema: LabelSchema,
    setting: str,
    seed: int,
    config: TrainConfig | None = None,
    hidden_dim: int = DEFAULT_HIDDEN,
) -> RunResult:
    config = replace(config or TrainConfig(), seed=seed)
    bundle, details = train_ensemble(instances, schema, setting, config, hidden_dim=hidden_dim)
    test = split_of(instances, "test")
    if not test:
        raise ValueError("need a non-empty test split")
    z_test, y_test = extract_z(bundle.experts, test, setting)
    predictions = ffnn_predict_batch(bundle.meta, z_test)
    report = metrics(confusion(y_test, predictions, schema.num_classes))
    return RunResult(
        seed=seed,
        accuracy=report.accuracy,
        macro_f1=report.macro_f1,
        expert_val_losses={
            key: history.best.val_loss for key, history in details.expert_histories.items()
        },
        meta_val_loss=details.meta_history.best.val_loss,
    )


def _exact_mean(values: np.ndarray) -> float:
    # identical runs must aggregate without float-summation noise
    if np.all(values == values[0]):
        return float(values[0])
    return float(values.mean())


def _exact_std(values: np.ndarray) -> float:
    if np.all(values == values[0]):
        return 0.0
    return float(values.std())


def instability_run(
    instances: Sequence[CitationInstance],
    schema: LabelSchema,
    setting: str,
    seeds: Sequence[int],
    config: TrainConfig | None = None,
    hidden_dim: int = DEFAULT_HIDDEN,
) -> InstabilityReport:
    """Execute one isolated pipeline run per seed and aggregate the metrics.

    A failing run aborts the harness; the partial report keeps the completed
    runs and records the failure.
    """
    if len(seeds) < 2:
        raise ValueError("need at least 2 seeds")
    runs: list[RunResult] = []
    partial = False
    failure = None
    for seed in seeds:
        try:
            runs.append(run_pipeline_once(instances, schema, setting, seed, config, hidden_dim))
        except Exception as exc:  # noqa: BLE001 - report and stop
            partial = True
            failure = f"seed {seed}: {exc}"
            break
    if runs:
        acc = np.array([r.accuracy for r in runs])
        mf1 = np.array([r.macro_f1 for r in runs])
        report = InstabilityReport(
            runs=runs,
            mean_accuracy=_exact_mean(acc),
            std_accuracy=_exact_std(acc),
            mean_macro_f1=_exact_mean(mf1),
            std_macro_f1=_exact_std(mf1),
        )
    else:
        report = InstabilityReport(
            runs=[], mean_accuracy=float("nan"), std_accuracy=float("nan"),
            mean_macro_f1=float("nan"), std_macro_f1=float("nan"),
        )
    report.partial = partial
    report.failure = failure
    return report


def report_csv(report: InstabilityReport) -> str:
    """Per-run metric table with mean and std rows appended."""
    lines = ["run,seed,accuracy,macro_f1"]
    for i, run in enumerate(report.runs):
        lines.append(f"{i},{run.seed},{run.accuracy!r},{run.macro_f1!r}")
    lines.append(f"mean,,{report.mean_accuracy!r},{report.mean_macro_f1!r}")
    lines.append(f"std,,{report.std_accuracy!r},{report.std_macro_f1!r}")
    if report.partial:
        lines.append(f"partial,,{report.failure},")
    return "\n".join(lines) + "\n"


def expert_loss_csv(report: InstabilityReport, class_names: Sequence[str]) -> str:
    """Best validation loss per expert and run (plus the meta head)."""
    if not report.runs:
        return "run,seed\n"
    keys = sorted(report.runs[0].expert_val_losses)
    headers = [f"{class_names[j]}:{variant}" for j, variant in keys]
    lines = ["run,seed," + ",".join(headers) + ",meta"]
    for i, run in enumerate(report.runs):
        cells = [repr(run.expert_val_losses[k]) for k in keys]
        lines.append(f"{i},{run.seed}," + ",".join(cells) + f",{run.meta_val_loss!r}")
    return "\n".join(lines) + "\n"
