import numpy as np
import pytest

from citeintent.corpus import SCICITE, FormattedInput, split_of
from citeintent.experts import predict
from citeintent.meta import ffnn_predict
from citeintent.pipeline import (
    bundle_from_dict,
    bundle_to_dict,
    canonical_dumps,
    derive_seed,
    extract_z,
    load_bundle,
    save_bundle,
    train_ensemble,
)
from citeintent.synthetic import vocab_driven_corpus
from citeintent.training import TrainConfig
from citeintent.voting import assemble_z
from conftest import FAST_CONFIG


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(7, "expert", 0, "domain") == derive_seed(7, "expert", 0, "domain")
    seen = {derive_seed(7, "expert", j, v) for j in range(3) for v in ("domain", "general")}
    assert len(seen) == 6
    assert derive_seed(7, "meta") != derive_seed(8, "meta")


def test_extract_z_matches_per_instance_assembly(small_bundle, small_corpus):
    val = split_of(small_corpus, "val")[:10]
    Z, labels = extract_z(small_bundle.experts, val, "WS")
    assert Z.shape == (10, 6)
    assert np.array_equal(labels, [inst.label for inst in val])
    from citeintent.corpus import format_input

    for i, inst in enumerate(val):
        z = assemble_z(small_bundle.experts, format_input(inst, "WS"))
        assert np.allclose(z, Z[i], atol=1e-12)


def test_bundle_structure(small_bundle):
    assert small_bundle.setting == "WS"
    assert small_bundle.num_classes == 3
    assert len(small_bundle.experts) == 6
    assert small_bundle.baseline_z.shape == (6,)
    assert np.all(small_bundle.baseline_z > 0) and np.all(small_bundle.baseline_z < 1)
    # class-major layout with the domain slot first
    keys = [(e.target_class, e.variant) for e in small_bundle.experts]
    assert keys == [(j, v) for j in range(3) for v in ("domain", "general")]


def test_trained_experts_validate_on_their_split(small_ensemble, small_corpus):
    bundle, details = small_ensemble
    for history in details.expert_histories.values():
        assert history.best.val_loss <= history.evals[0].val_loss
    # the ensemble must comfortably beat chance on the synthetic test split
    from citeintent.meta import ffnn_predict_batch
    from citeintent.metrics import confusion, metrics

    test = split_of(small_corpus, "test")
    Z, y = extract_z(bundle.experts, test, "WS")
    report = metrics(confusion(y, ffnn_predict_batch(bundle.meta, Z), 3))
    assert report.accuracy > 0.8


def test_bundle_json_round_trip(small_bundle, tmp_path):
    path = tmp_path / "bundle.json"
    save_bundle(small_bundle, path)
    reloaded = load_bundle(path)
    assert reloaded.schema == small_bundle.schema
    assert reloaded.setting == small_bundle.setting
    assert reloaded.metadata == small_bundle.metadata
    assert np.array_equal(reloaded.baseline_z, small_bundle.baseline_z)
    for a, b in zip(reloaded.experts, small_bundle.experts):
        assert np.array_equal(a.weights, b.weights)
        assert a.bias == b.bias
        assert a.featurizer.df == b.featurizer.df
    for a, b in zip(reloaded.meta.params(), small_bundle.meta.params()):
        assert np.array_equal(a, b)
    # identical predictions after the round trip
    inp = FormattedInput("Results. applied the assay protocol [3]", "WS")
    z_a = assemble_z(small_bundle.experts, inp)
    z_b = assemble_z(reloaded.experts, inp)
    assert np.array_equal(z_a, z_b)
    assert ffnn_predict(small_bundle.meta, z_a).label == ffnn_predict(reloaded.meta, z_b).label


def test_training_is_byte_deterministic(tmp_path):
    corpus = vocab_driven_corpus(220, 2)
    config = TrainConfig(max_epochs=2, eval_every=4, patience=10, seed=5)
    b1, _ = train_ensemble(corpus, SCICITE, "WS", config, hidden_dim=8)
    b2, _ = train_ensemble(corpus, SCICITE, "WS", config, hidden_dim=8)
    assert canonical_dumps(bundle_to_dict(b1)) == canonical_dumps(bundle_to_dict(b2))


def test_training_rejects_missing_splits():
    corpus = [i for i in vocab_driven_corpus(60, 3) if i.split == "train"]
    with pytest.raises(ValueError):
        train_ensemble(tuple(corpus), SCICITE, "WS", FAST_CONFIG)


def test_training_log_files_written(tmp_path):
    corpus = vocab_driven_corpus(200, 6)
    config = TrainConfig(max_epochs=1, eval_every=4, patience=10, seed=1)
    train_ensemble(corpus, SCICITE, "WoS", config, hidden_dim=4, log_dir=tmp_path)
    names = sorted(p.name for p in tmp_path.glob("*.csv"))
    assert "meta_ffnn.csv" in names
    assert "expert_c0_domain.csv" in names and "expert_c2_general.csv" in names
    assert len(names) == 7


def test_six_class_pipeline_end_to_end():
    # skewed six-class setup: 12 experts, 12-wide z-vectors, exact Shapley
    # over 2^12 coalitions
    from citeintent.corpus import ACL_ARC
    from citeintent.explain import exact_shapley
    from citeintent.meta import ffnn_predict_batch
    from citeintent.metrics import confusion, metrics
    from citeintent.synthetic import multiclass_corpus

    probs = (0.51, 0.18, 0.18, 0.04, 0.05, 0.04)
    corpus = multiclass_corpus(1500, 31, ACL_ARC, probs)
    train_labels = {inst.label for inst in split_of(corpus, "train")}
    assert train_labels == set(range(6))

    config = TrainConfig(max_epochs=15, eval_every=10, patience=50, seed=1)
    bundle, _ = train_ensemble(corpus, ACL_ARC, "WS", config, hidden_dim=16)
    assert len(bundle.experts) == 12

    test = split_of(corpus, "test")
    Z, y = extract_z(bundle.experts, test, "WS")
    assert Z.shape[1] == 12
    report = metrics(confusion(y, ffnn_predict_batch(bundle.meta, Z), 6))
    assert report.macro_f1 > 0.8

    shapley = exact_shapley(bundle.meta, Z[0], bundle.baseline_z, output_class=int(y[0]))
    assert shapley.phi.shape == (12,)
    assert shapley.efficiency_residual < 1e-9


def test_single_expert_bundle_round_trip(small_bundle, tmp_path):
    from citeintent.pipeline import load_expert_bundle, save_expert_bundle

    expert = small_bundle.experts[3]
    path = tmp_path / "expert.json"
    save_expert_bundle(expert, path, dataset="scicite", setting="WS")
    reloaded, meta = load_expert_bundle(path)
    assert meta == {"dataset": "scicite", "setting": "WS"}
    assert reloaded.target_class == expert.target_class
    assert reloaded.variant == expert.variant
    assert np.array_equal(reloaded.weights, expert.weights)
    assert reloaded.bias == expert.bias
    inp = FormattedInput("Results. a sentence with outcomes", "WS")
    assert predict(reloaded, inp) == predict(expert, inp)


def test_bundle_dict_rejects_wrong_kind(small_bundle):
    raw = bundle_to_dict(small_bundle)
    raw["kind"] = "other"
    with pytest.raises(ValueError):
        bundle_from_dict(raw)
    raw["kind"] = "ensemble-bundle"
    raw["format_version"] = 99
    with pytest.raises(ValueError):
        bundle_from_dict(raw)
