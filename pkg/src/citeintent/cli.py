"""Command-line entry points: train, extract-z, aggregate, explain,
instability, serve, classify.

Every subcommand also reads defaults from a JSON config file passed as
``--config``; explicit flags override the file. Exit status is 0 on success
and nonzero with a diagnostic otherwise.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import explain as explain_mod
from .corpus import (
    CitationInstance,
    LabelSchema,
    builtin_schema,
    load_dataset,
    load_schema,
    split_of,
)
from .instability import expert_loss_csv, instability_run, report_csv
from .meta import ffnn_predict_batch, knn_predict, lr_predict_batch, train_ffnn, train_knn_head, train_lr_head
from .metrics import confusion, metrics, metrics_to_dict
from .pipeline import canonical_dumps, extract_z, load_bundle, save_bundle, train_ensemble
from .service import BundlePair, classification_body, build_app
from .synthetic import vocab_driven_corpus
from .training import TrainConfig
from .voting import avg_vote, load_z_matrix, majority_vote, max_vote, save_z_matrix
from .weighting import (
    fit_all_geometric,
    fit_all_stackingc,
    stackingc_predict,
    weighted_avg_vote,
    weighted_majority_vote,
    weighted_max_vote,
    weighting_diagnostics,
)

STRATEGIES = ("max", "avg", "maj", "wmax", "wavg", "wmaj", "stackingc", "ffnn", "lr", "knn")
_SUPERVISED = ("wmax", "wavg", "wmaj", "stackingc", "ffnn", "lr", "knn")


def _resolve_schema(name_or_path: str) -> LabelSchema:
    if Path(name_or_path).exists():
        return load_schema(name_or_path)
    return builtin_schema(name_or_path)


def _load_instances(dataset: str, schema: LabelSchema, default_split: str | None) -> tuple[CitationInstance, ...]:
    return load_dataset(dataset, schema, default_split=default_split)


def parse_seeds(expr: str) -> list[int]:
    """Accepts '1..10' (inclusive) or a comma list like '1,2,7'."""
    expr = expr.strip()
    if ".." in expr:
        lo, hi = expr.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in expr.split(",") if part.strip()]


def _train_config(kwargs: dict) -> TrainConfig:
    return TrainConfig(
        learning_rate=kwargs["learning_rate"],
        weight_decay=kwargs["weight_decay"],
        batch_size=kwargs["batch_size"],
        eval_every=kwargs["eval_every"],
        patience=kwargs["patience"],
        plateau_factor=kwargs["plateau_factor"],
        plateau_patience=kwargs["plateau_patience"],
        max_epochs=kwargs["max_epochs"],
        seed=kwargs["seed"],
    )


def _training_options(fn):
    options = [
        click.option("--learning-rate", type=float, default=0.1, show_default=True),
        click.option("--weight-decay", type=float, default=0.01, show_default=True),
        click.option("--batch-size", type=int, default=32, show_default=True),
        click.option("--eval-every", type=int, default=10, show_default=True),
        click.option("--patience", type=int, default=50, show_default=True),
        click.option("--plateau-factor", type=float, default=0.5, show_default=True),
        click.option("--plateau-patience", type=int, default=10, show_default=True),
        click.option("--max-epochs", type=int, default=50, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file with per-subcommand option defaults.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None) -> None:
    """Citation-intent ensemble toolkit."""
    if config_path:
        ctx.default_map = json.loads(Path(config_path).read_text(encoding="utf-8"))


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--schema", default="scicite", show_default=True, help="Built-in schema name or a schema file.")
@click.option("--setting", type=click.Choice(["WS", "WoS"]), default="WS", show_default=True)
@click.option("--default-split", type=click.Choice(["train", "val", "test"]), default=None,
              help="Split for records without a split field (single-file datasets).")
@click.option("--hidden", type=int, default=32, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--log-dir", type=click.Path(), default=None)
@_training_options
def train(dataset, schema, setting, default_split, hidden, out, log_dir, **kwargs) -> None:
    """Train the full ensemble and write one bundle file."""
    resolved = _resolve_schema(schema)
    instances = _load_instances(dataset, resolved, default_split)
    config = _train_config(kwargs)
    bundle, details = train_ensemble(instances, resolved, setting, config, hidden_dim=hidden, log_dir=log_dir)
    save_bundle(bundle, out)
    losses = {f"{k[0]}:{k[1]}": h.best.val_loss for k, h in details.expert_histories.items()}
    click.echo(canonical_dumps({
        "bundle": str(out),
        "setting": setting,
        "expert_val_losses": losses,
        "meta_val_loss": details.meta_history.best.val_loss,
    }))


@main.command("extract-z")
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--split", type=click.Choice(["train", "val", "test"]), default="test", show_default=True)
@click.option("--default-split", type=click.Choice(["train", "val", "test"]), default=None)
@click.option("--out", required=True, type=click.Path())
def extract_z_cmd(bundle_path, dataset, split, default_split, out) -> None:
    """Cache the expert probability vectors of one split as CSV."""
    bundle = load_bundle(bundle_path)
    instances = split_of(_load_instances(dataset, bundle.schema, default_split), split)
    if not instances:
        raise click.ClickException(f"split {split!r} is empty")
    Z, y = extract_z(bundle.experts, instances, bundle.setting)
    save_z_matrix(out, Z, y)
    click.echo(canonical_dumps({"out": str(out), "rows": int(Z.shape[0]), "columns": int(Z.shape[1])}))


@main.command()
@click.option("--strategy", type=click.Choice(STRATEGIES), required=True)
@click.option("--z", "z_path", required=True, type=click.Path(exists=True), help="Evaluation z cache.")
@click.option("--fit-z", "fit_path", type=click.Path(exists=True), default=None,
              help="Fitting z cache (validation split for weighting/stacking, train split for heads).")
@click.option("--val-z", "val_path", type=click.Path(exists=True), default=None,
              help="Validation z cache for the gradient-trained heads.")
@click.option("--gamma", type=float, default=0.5, show_default=True)
@click.option("--knn-k", type=int, default=5, show_default=True)
@click.option("--hidden", type=int, default=32, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--class-names", default=None, help="Comma-separated names for the metrics report.")
@click.option("--diagnostics-out", type=click.Path(), default=None,
              help="Write the per-class weighting/stacking fit report (needs --fit-z).")
def aggregate(strategy, z_path, fit_path, val_path, gamma, knn_k, hidden, seed, class_names,
              diagnostics_out) -> None:
    """Run one aggregation strategy on cached z-vectors and emit metrics JSON."""
    Z, y = load_z_matrix(z_path)
    num_classes = Z.shape[1] // 2
    if strategy in _SUPERVISED and fit_path is None:
        raise click.ClickException(f"strategy {strategy!r} needs --fit-z")
    fit_Z, fit_y = load_z_matrix(fit_path) if fit_path else (None, None)
    if diagnostics_out:
        if fit_Z is None:
            raise click.ClickException("--diagnostics-out needs --fit-z")
        report = weighting_diagnostics(fit_Z, fit_y, num_classes)
        Path(diagnostics_out).write_text(canonical_dumps(report) + "\n", encoding="utf-8")

    if strategy == "max":
        preds = [max_vote(z) for z in Z]
    elif strategy == "avg":
        preds = [avg_vote(z)[1] for z in Z]
    elif strategy == "maj":
        preds = [majority_vote(z, gamma) for z in Z]
    elif strategy in ("wmax", "wavg", "wmaj"):
        W = fit_all_geometric(fit_Z, fit_y, num_classes)
        if strategy == "wmax":
            preds = [weighted_max_vote(z, W) for z in Z]
        elif strategy == "wavg":
            preds = [weighted_avg_vote(z, W)[1] for z in Z]
        else:
            preds = [weighted_majority_vote(z, W, gamma) for z in Z]
    elif strategy == "stackingc":
        heads = fit_all_stackingc(fit_Z, fit_y, num_classes)
        preds = [stackingc_predict(z, heads)[1] for z in Z]
    else:
        if val_path is None and strategy in ("ffnn", "lr"):
            raise click.ClickException(f"strategy {strategy!r} needs --val-z")
        config = TrainConfig(seed=seed)
        if strategy == "ffnn":
            val_Z, val_y = load_z_matrix(val_path)
            params, _ = train_ffnn(fit_Z, fit_y, val_Z, val_y, config, num_classes, hidden_dim=hidden)
            preds = ffnn_predict_batch(params, Z)
        elif strategy == "lr":
            val_Z, val_y = load_z_matrix(val_path)
            head, _ = train_lr_head(fit_Z, fit_y, val_Z, val_y, config, num_classes)
            preds = lr_predict_batch(head, Z)
        else:
            head = train_knn_head(fit_Z, fit_y, knn_k, num_classes)
            preds = [knn_predict(head, z)[0] for z in Z]

    names = class_names.split(",") if class_names else None
    report = metrics(confusion(y, list(preds), num_classes))
    click.echo(canonical_dumps({"strategy": strategy, **metrics_to_dict(report, names)}))


@main.command("explain")
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--split", type=click.Choice(["train", "val", "test"]), default="test", show_default=True)
@click.option("--default-split", type=click.Choice(["train", "val", "test"]), default=None)
@click.option("--limit", type=int, default=None, help="Explain only the first N instances.")
@click.option("--reports-out", type=click.Path(), default=None, help="Per-instance reports (JSON lines).")
@click.option("--masses-csv", type=click.Path(), default=None, help="Attribution-mass statistics table.")
@click.option("--correlations-prefix", type=click.Path(), default=None,
              help="Write one signed-mass correlation CSV per predicted class at PREFIX_<class>.csv.")
@click.option("--shapley-csv", type=click.Path(), default=None,
              help="Plot-ready per-instance aggregator attributions (exact enumeration).")
@click.option("--threshold", type=float, default=None)
def explain_cmd(bundle_path, dataset, split, default_split, limit, reports_out, masses_csv,
                correlations_prefix, shapley_csv, threshold) -> None:
    """Emit explanation reports, mass statistics and correlation matrices."""
    bundle = load_bundle(bundle_path)
    instances = split_of(_load_instances(dataset, bundle.schema, default_split), split)
    if limit is not None:
        instances = instances[:limit]
    if not instances:
        raise click.ClickException("nothing to explain")

    ordered = sorted(bundle.experts, key=lambda e: (e.target_class, e.variant != "domain"))
    Z, _y = extract_z(ordered, instances, bundle.setting)
    predicted = {str(i): int(p) for i, p in enumerate(ffnn_predict_batch(bundle.meta, Z))}

    if reports_out:
        with open(reports_out, "w", encoding="utf-8") as fh:
            for i, inst in enumerate(instances):
                report = explain_mod.explain_instance_report(
                    bundle, inst.section_title, inst.context, threshold=threshold, instance_id=str(i)
                )
                fh.write(canonical_dumps(report) + "\n")

    masses = []
    if masses_csv or correlations_prefix:
        from .corpus import format_input

        for i, inst in enumerate(instances):
            inp = format_input(inst, bundle.setting)
            for expert in ordered:
                masses.append(explain_mod.attribution_mass(expert, inp, str(i)))
        stats = explain_mod.mass_statistics(masses, predicted)
        if masses_csv:
            Path(masses_csv).write_text(
                explain_mod.mass_statistics_csv(stats, bundle.schema.classes), encoding="utf-8"
            )
        if correlations_prefix:
            for label, group in stats.items():
                if group.omitted:
                    continue
                out = Path(f"{correlations_prefix}_{bundle.schema.classes[label]}.csv")
                out.write_text(explain_mod.correlation_csv(group, bundle.schema.classes), encoding="utf-8")

    if shapley_csv:
        header = ["instance_id", "output_class"] + [
            f"phi_{bundle.schema.classes[e.target_class]}:{e.variant}" for e in ordered
        ]
        lines = [",".join(header)]
        for i in range(len(instances)):
            label = predicted[str(i)]
            report = explain_mod.exact_shapley(
                bundle.meta, Z[i], bundle.baseline_z, output_class=label, instance_id=str(i)
            )
            lines.append(
                ",".join([str(i), bundle.schema.classes[label]] + [repr(v) for v in report.phi])
            )
        Path(shapley_csv).write_text("\n".join(lines) + "\n", encoding="utf-8")

    click.echo(canonical_dumps({"explained": len(instances), "split": split}))


@main.command("instability")
@click.option("--dataset", type=click.Path(exists=True), default=None,
              help="JSON-lines dataset; omitted => seeded synthetic corpus.")
@click.option("--schema", default="scicite", show_default=True)
@click.option("--default-split", type=click.Choice(["train", "val", "test"]), default=None)
@click.option("--synthetic-size", type=int, default=900, show_default=True)
@click.option("--synthetic-seed", type=int, default=13, show_default=True)
@click.option("--setting", type=click.Choice(["WS", "WoS"]), default="WS", show_default=True)
@click.option("--seeds", required=True, help="Seed list: '1..10' or '1,2,7'.")
@click.option("--hidden", type=int, default=32, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Metric table CSV (default: stdout).")
@click.option("--losses-out", type=click.Path(), default=None, help="Per-expert loss minima CSV.")
@_training_options
def instability_cmd(dataset, schema, default_split, synthetic_size, synthetic_seed, setting,
                    seeds, hidden, out, losses_out, **kwargs) -> None:
    """Repeat the whole pipeline across seeds and report metric spread."""
    resolved = _resolve_schema(schema)
    if dataset:
        instances = _load_instances(dataset, resolved, default_split)
    else:
        instances = vocab_driven_corpus(synthetic_size, synthetic_seed)
    seed_list = parse_seeds(seeds)
    config = _train_config(kwargs)
    report = instability_run(instances, resolved, setting, seed_list, config, hidden_dim=hidden)
    table = report_csv(report)
    if out:
        Path(out).write_text(table, encoding="utf-8")
    else:
        click.echo(table, nl=False)
    if losses_out:
        Path(losses_out).write_text(expert_loss_csv(report, resolved.classes), encoding="utf-8")
    if report.partial:
        raise click.ClickException(f"harness aborted: {report.failure}")


def _load_pair(ws_path: str | None, wos_path: str | None) -> BundlePair:
    if not ws_path and not wos_path:
        raise click.ClickException("provide --ws-bundle and/or --wos-bundle")
    return BundlePair(
        ws=load_bundle(ws_path) if ws_path else None,
        wos=load_bundle(wos_path) if wos_path else None,
    )


@main.command()
@click.option("--ws-bundle", type=click.Path(exists=True), default=None)
@click.option("--wos-bundle", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--max-batch", type=int, default=512, show_default=True)
def serve(ws_bundle, wos_bundle, host, port, max_batch) -> None:
    """Run the HTTP classification service."""
    import uvicorn

    app = build_app(_load_pair(ws_bundle, wos_bundle), max_batch=max_batch)
    uvicorn.run(app, host=host, port=port)


@main.command("classify")
@click.option("--ws-bundle", type=click.Path(exists=True), default=None)
@click.option("--wos-bundle", type=click.Path(exists=True), default=None)
@click.option("--in", "in_path", required=True, type=click.Path(exists=True),
              help="JSON: a request object or a bare item list.")
@click.option("--mode", type=click.Choice(["mixed", "with_sections", "without_sections"]), default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--out", type=click.Path(), default=None, help="Write the body here instead of stdout.")
@click.option("--verify", "verify_path", type=click.Path(exists=True), default=None,
              help="Check the produced body is byte-identical to this file.")
def classify_cmd(ws_bundle, wos_bundle, in_path, mode, threshold, out, verify_path) -> None:
    """Classify a batch file; the output equals the service body byte-for-byte."""
    pair = _load_pair(ws_bundle, wos_bundle)
    raw = json.loads(Path(in_path).read_text(encoding="utf-8"))
    if isinstance(raw, list):
        request = {"items": raw}
    elif isinstance(raw, dict):
        request = raw
    else:
        raise click.ClickException("input must be a JSON object or list")

    items = []
    for entry in request.get("items", []):
        if isinstance(entry, dict):
            items.append((entry.get("section_title"), entry.get("context", "")))
        elif isinstance(entry, (list, tuple)) and len(entry) == 2:
            items.append((entry[0], entry[1]))
        else:
            raise click.ClickException(f"bad item: {entry!r}")
    effective_mode = mode or request.get("mode", "mixed")
    effective_threshold = threshold if threshold is not None else request.get("threshold", 0.9)
    try:
        body = classification_body(pair, items, effective_mode, effective_threshold)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    text = canonical_dumps(body)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text)
    if verify_path:
        expected = Path(verify_path).read_text(encoding="utf-8").strip()
        if expected != text:
            raise click.ClickException("verification failed: body differs from the reference file")
        click.echo("verified: bodies are byte-identical", err=True)


if __name__ == "__main__":
    sys.exit(main())
