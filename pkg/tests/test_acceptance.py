"""Acceptance suite: one test per release criterion, each printing a pass/fail
line (run with ``pytest -s tests/test_acceptance.py`` to see them live).

Every tolerance is pinned here; nothing is deferred to later calibration.
"""

import math
import os
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from citeintent.corpus import SCICITE, load_dataset, split_of
from citeintent.explain import exact_shapley
from citeintent.instability import instability_run, report_csv
from citeintent.meta import ffnn_gradients, ffnn_loss, ffnn_predict_batch, init_ffnn
from citeintent.metrics import ConfusionMatrix, confusion, metrics
from citeintent.pipeline import extract_z, train_ensemble
from citeintent.synthetic import title_driven_corpus, vocab_driven_corpus
from citeintent.training import TrainConfig
from citeintent.voting import avg_vote, majority_vote, max_vote
from citeintent.weighting import (
    ClassWeights,
    fit_geometric_weights,
    fit_stackingc,
    residual_sum_of_squares,
    reweight_slots,
    weighted_avg_vote,
    weighted_majority_vote,
    weighted_max_vote,
)
from helpers import (
    brute_avg_vote,
    brute_majority_vote,
    brute_max_vote,
    brute_reweight,
    softmax_pair,
)


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[acceptance] {name}: FAIL", flush=True)
        raise
    print(f"[acceptance] {name}: PASS", flush=True)


def test_aggregator_oracle_equivalence():
    with criterion("aggregator oracle equivalence (1000 z, K=3 and K=6, < 5 s)"):
        rng = np.random.default_rng(2024)
        started = time.perf_counter()
        for num_classes in (3, 6):
            fixed_pairs = [softmax_pair(*rng.normal(size=2)) for _ in range(num_classes)]
            weights = [
                ClassWeights(j, np.array(pair), np.zeros(2)) for j, pair in enumerate(fixed_pairs)
            ]
            for _ in range(1000):
                z = rng.random(2 * num_classes)
                gamma = float(rng.uniform(0.2, 0.8))
                zl = list(z)

                assert max_vote(z) == brute_max_vote(zl)
                assert avg_vote(z)[1] == brute_avg_vote(zl)[1]
                assert majority_vote(z, gamma) == brute_majority_vote(zl, gamma)

                brute_weighted = brute_reweight(zl, fixed_pairs)
                assert weighted_max_vote(z, weights) == brute_max_vote(brute_weighted)
                assert weighted_avg_vote(z, weights)[1] == brute_avg_vote(brute_weighted)[1]
                assert weighted_majority_vote(z, weights, gamma) == brute_majority_vote(
                    brute_weighted, gamma
                )
                assert np.array_equal(reweight_slots(z, weights), brute_weighted)
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"took {elapsed:.2f}s"


def test_geometric_framework_optimality():
    with criterion("geometric weights: optimal vs 10,000 candidates, orthogonality < 1e-8"):
        rng = np.random.default_rng(77)
        candidates = rng.uniform(-2.0, 2.0, size=(10_000, 2))
        for _ in range(100):
            n = int(rng.integers(4, 60))
            Zj = rng.random((n, 2))
            k = (rng.random(n) > rng.uniform(0.2, 0.8)).astype(float)
            cw = fit_geometric_weights(Zj, k, 0)

            residual = Zj @ cw.raw_weights - k
            assert np.max(np.abs(Zj.T @ residual)) < 1e-8

            fitted = residual_sum_of_squares(Zj, k, cw.raw_weights)
            errors = Zj @ candidates.T - k[:, None]
            candidate_rss = np.einsum("ij,ij->j", errors, errors)
            assert fitted <= candidate_rss.min() + 1e-12


def test_stackingc_exact_recovery():
    with criterion("stacking heads: noiseless recovery, coefficient error < 1e-9"):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(5, 50))
            Zj = rng.random((n, 2))
            if np.linalg.matrix_rank(np.hstack([Zj, np.ones((n, 1))])) < 3:
                continue
            theta = rng.normal(size=2)
            intercept = float(rng.normal())
            k = Zj @ theta + intercept
            head = fit_stackingc(Zj, k, 0)
            assert not head.degenerate
            assert np.max(np.abs(head.theta - theta)) < 1e-9
            assert abs(head.intercept - intercept) < 1e-9


def test_ffnn_gradient_check():
    with criterion("network gradients vs central differences: rel err < 1e-4, 100 draws, < 30 s"):
        started = time.perf_counter()
        rng = np.random.default_rng(31)
        step = 1e-5
        checked = 0
        seed = 0
        while checked < 100:
            seed += 1
            input_dim = int(rng.integers(4, 9))
            hidden = int(rng.integers(2, 6))
            output = int(rng.integers(2, 5))
            params = init_ffnn(input_dim, hidden, output, seed)
            params.b1 = rng.normal(size=hidden) * 0.3
            params.b2 = rng.normal(size=output) * 0.3
            Z = rng.random((4, input_dim))
            y = rng.integers(0, output, size=4)
            pre = Z @ params.w1.T + params.b1
            if np.min(np.abs(pre)) < 1e-3:
                continue  # central differences are invalid at the rectifier kink
            _, grads = ffnn_gradients(params, Z, y)
            worst = 0.0
            for which, grad in enumerate(grads):
                tensor = params.params()[which]
                it = np.nditer(tensor, flags=["multi_index"])
                while not it.finished:
                    idx = it.multi_index
                    keep = tensor[idx]
                    tensor[idx] = keep + step
                    up = ffnn_loss(params, Z, y)
                    tensor[idx] = keep - step
                    down = ffnn_loss(params, Z, y)
                    tensor[idx] = keep
                    fd = (up - down) / (2 * step)
                    denom = max(abs(fd), abs(grad[idx]), 1e-6)
                    worst = max(worst, abs(fd - grad[idx]) / denom)
                    it.iternext()
            assert worst < 1e-4, f"draw {checked}: relative error {worst:.2e}"
            checked += 1
        elapsed = time.perf_counter() - started
        assert elapsed < 30.0, f"took {elapsed:.2f}s"


def test_shapley_axioms(small_bundle, small_corpus):
    with criterion("shapley: efficiency < 1e-9, null player, symmetry, linear closed form"):
        # efficiency on real explained instances, every output class
        test = split_of(small_corpus, "test")[:12]
        Z, _ = extract_z(small_bundle.experts, test, "WS")
        for i, z in enumerate(Z):
            for output_class in range(3):
                report = exact_shapley(
                    small_bundle.meta, z, small_bundle.baseline_z, output_class, str(i)
                )
                assert report.efficiency_residual < 1e-9

        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(4, 9))
            w = rng.normal(size=n)
            w[1] = 0.0  # feature 1 is a null player
            z = rng.random(n)
            baseline = rng.random(n)
            report = exact_shapley(lambda v, w=w: float(w @ v), z, baseline)
            assert report.phi[1] == 0.0
            assert np.max(np.abs(report.phi - w * (z - baseline))) < 1e-12
            assert report.efficiency_residual < 1e-9

            # symmetry: two interchangeable features with equal values
            sym = np.array([0.6, 0.6, *rng.random(n - 2)])
            base = np.full(n, 0.2)
            sym_report = exact_shapley(lambda v: float(v[0] + v[1] + 0.3 * v[2:].sum()), sym, base)
            assert abs(sym_report.phi[0] - sym_report.phi[1]) < 1e-15


def test_reference_confusion_matrix_replay():
    with criterion("reference confusion-matrix replay: 179 errors, accuracy 1680/1859 (1e-12)"):
        cm = ConfusionMatrix(np.array([[538, 61, 5], [33, 902, 61], [2, 17, 240]]))
        assert cm.total == 1859
        assert cm.misclassified == 179
        report = metrics(cm)
        assert abs(report.accuracy - 1680 / 1859) < 1e-12
        assert abs(report.micro_f1 - 1680 / 1859) < 1e-12


def test_end_to_end_synthetic_pipeline():
    with criterion("end-to-end WS pipeline: macro-F1 >= 0.90 in < 60 s, FFNN >= voting - 0.02"):
        started = time.perf_counter()
        corpus = vocab_driven_corpus(1600, 42)
        labels = [inst.label for inst in corpus]
        counts = np.bincount(labels, minlength=3) / len(labels)
        assert abs(counts[1] - 0.58) < 0.05  # skewed like the reference distribution
        assert abs(counts[0] - 0.29) < 0.05
        assert abs(counts[2] - 0.13) < 0.05

        config = TrainConfig(seed=7, max_epochs=20)
        bundle, _ = train_ensemble(corpus, SCICITE, "WS", config)
        test = split_of(corpus, "test")
        Z, y = extract_z(bundle.experts, test, "WS")

        ffnn_report = metrics(confusion(y, ffnn_predict_batch(bundle.meta, Z), 3))
        assert ffnn_report.macro_f1 >= 0.90

        for name, voter in (
            ("max", lambda z: max_vote(z)),
            ("avg", lambda z: avg_vote(z)[1]),
            ("maj", lambda z: majority_vote(z)),
        ):
            voting_report = metrics(confusion(y, [voter(z) for z in Z], 3))
            assert ffnn_report.macro_f1 >= voting_report.macro_f1 - 0.02, name

        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"took {elapsed:.2f}s"


def test_framing_device_direction():
    with criterion("framing direction: WS macro-F1 >= WoS macro-F1 on title-correlated corpus"):
        corpus = title_driven_corpus(1200, 5)
        test = split_of(corpus, "test")
        scores = {}
        for setting in ("WS", "WoS"):
            config = TrainConfig(seed=11, max_epochs=15)
            bundle, _ = train_ensemble(corpus, SCICITE, setting, config)
            Z, y = extract_z(bundle.experts, test, setting)
            scores[setting] = metrics(confusion(y, ffnn_predict_batch(bundle.meta, Z), 3)).macro_f1
        assert scores["WS"] >= scores["WoS"]


def test_determinism_and_instability_report():
    with criterion("determinism: 10 equal seeds => std exactly 0; 10 distinct seeds => run table"):
        corpus = vocab_driven_corpus(300, 23)
        config = TrainConfig(max_epochs=2, eval_every=4, patience=15, seed=0)

        same = instability_run(corpus, SCICITE, "WS", [3] * 10, config, hidden_dim=8)
        assert same.std_accuracy == 0.0
        assert same.std_macro_f1 == 0.0
        assert len({r.accuracy for r in same.runs}) == 1

        distinct = instability_run(corpus, SCICITE, "WS", list(range(1, 11)), config, hidden_dim=8)
        assert len(distinct.runs) == 10
        table = report_csv(distinct).strip().splitlines()
        assert table[0] == "run,seed,accuracy,macro_f1"
        assert len(table) == 1 + 10 + 2
        accs = np.array([r.accuracy for r in distinct.runs])
        assert distinct.mean_accuracy == pytest.approx(accs.mean(), abs=1e-12)
        assert distinct.std_accuracy == pytest.approx(accs.std(), abs=1e-12)
        for run in distinct.runs:
            assert len(run.expert_val_losses) == 6


def _scicite_dir():
    env = os.environ.get("CITEINTENT_SCICITE_DIR")
    if env and Path(env).is_dir():
        return Path(env)
    local = Path(__file__).resolve().parent.parent / "data" / "scicite"
    if local.is_dir():
        return local
    return None


def test_real_dataset_sanity_floor_when_supplied():
    path = _scicite_dir()
    if path is None:
        pytest.skip("real 3-class release not supplied (set CITEINTENT_SCICITE_DIR)")
    with criterion("real dataset: beats the majority-class macro-F1 baseline by >= 0.15"):
        instances = load_dataset(path, SCICITE)
        assert len(instances) == 11020
        config = TrainConfig(seed=7, max_epochs=10)
        bundle, _ = train_ensemble(instances, SCICITE, "WS", config)
        test = split_of(instances, "test")
        Z, y = extract_z(bundle.experts, test, "WS")
        report = metrics(confusion(y, ffnn_predict_batch(bundle.meta, Z), 3))
        majority = int(np.bincount([i.label for i in split_of(instances, "train")]).argmax())
        baseline = metrics(confusion(y, [majority] * len(y), 3))
        assert report.macro_f1 >= baseline.macro_f1 + 0.15
