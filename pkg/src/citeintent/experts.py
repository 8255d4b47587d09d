"""Level-0 binary experts: hashed-text featurizers and logistic classifiers.

Two heterogeneous featurizer variants stand in for a domain-specialized and a
general-purpose encoder:

* ``domain`` keeps case, bracketed reference markers (e.g. "[12]") and numeric
  tokens, and weights features by inverse document frequency fitted on the
  training corpus.
* ``general`` lowercases, strips reference markers and digits, and uses raw
  counts.

Both hash unigrams and bigrams into a fixed feature space (no dynamic
vocabulary), so unseen tokens still map to stable coordinates. An expert is a
logistic head over one variant's features: its positive probability is
``sigmoid(w . phi(text) + b)`` and the pair (negative, positive) sums to 1
exactly, matching a two-logit softmax output layer.
"""

from __future__ import annotations

import hashlib
import math
import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import BinaryDataset, FormattedInput
from .numerics import sigmoid
from .training import TrainConfig, TrainingHistory, fit_minibatch_sgd

VARIANTS = ("domain", "general")
DEFAULT_DIMENSION = 2**15

_REF_MARKER = re.compile(r"\[\d+(?:\s*[,;\-–]\s*\d+)*\]")
_DOMAIN_TOKEN = re.compile(r"\[\d+(?:\s*[,;\-–]\s*\d+)*\]|[A-Za-z0-9]+(?:['\-][A-Za-z0-9]+)*")
_GENERAL_TOKEN = re.compile(r"[a-z]+(?:['\-][a-z]+)*")

TokenIncrements = list[tuple[str, list[tuple[int, float]]]]


def _stable_hash(key: str, dimension: int) -> int:
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dimension


class HashedTextFeaturizer:
    """Hashed unigram+bigram features for one tokenizer variant.

    ``fit`` freezes document frequencies on a training corpus; the domain
    variant needs them for idf weighting, the general variant only flips the
    fitted flag. Featurizing is deterministic and the empty text yields the
    zero vector.
    """

    def __init__(self, variant: str, dimension: int = DEFAULT_DIMENSION):
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.variant = variant
        self.dimension = dimension
        self.fitted = False
        self.doc_count = 0
        self.df: dict[int, int] = {}

    def tokenize(self, text: str) -> list[str]:
        if self.variant == "domain":
            return _DOMAIN_TOKEN.findall(text)
        return _GENERAL_TOKEN.findall(_REF_MARKER.sub(" ", text).lower())

    def _raw_increments(self, text: str) -> TokenIncrements:
        # Unigrams credit their token fully; each bigram's unit increment is
        # split half and half between its two tokens so that the per-token
        # decomposition sums exactly to the full feature vector.
        tokens = self.tokenize(text)
        out: TokenIncrements = [(tok, []) for tok in tokens]
        for i, tok in enumerate(tokens):
            out[i][1].append((_stable_hash("u\x1f" + tok, self.dimension), 1.0))
            if i > 0:
                idx = _stable_hash("b\x1f" + tokens[i - 1] + "\x1f" + tok, self.dimension)
                out[i - 1][1].append((idx, 0.5))
                out[i][1].append((idx, 0.5))
        return out

    def fit(self, texts: Iterable[str]) -> "HashedTextFeaturizer":
        doc_count = 0
        df: dict[int, int] = defaultdict(int)
        for text in texts:
            doc_count += 1
            seen = {idx for _tok, incs in self._raw_increments(text) for idx, _ in incs}
            for idx in seen:
                df[idx] += 1
        self.doc_count = doc_count
        self.df = dict(df) if self.variant == "domain" else {}
        self.fitted = True
        return self

    def idf(self, index: int) -> float:
        return math.log((1 + self.doc_count) / (1 + self.df.get(index, 0))) + 1.0

    def token_increments(self, text: str) -> TokenIncrements:
        """Per-token feature increments, idf-weighted for the domain variant."""
        if not self.fitted:
            raise ValueError("featurizer must be fitted before use")
        raw = self._raw_increments(text)
        if self.variant != "domain":
            return raw
        return [(tok, [(idx, inc * self.idf(idx)) for idx, inc in incs]) for tok, incs in raw]

    def featurize(self, text: str) -> dict[int, float]:
        """Sparse feature vector as an index -> value map."""
        vec: dict[int, float] = defaultdict(float)
        for _tok, incs in self.token_increments(text):
            for idx, inc in incs:
                vec[idx] += inc
        return dict(vec)

    def dense(self, text: str) -> np.ndarray:
        out = np.zeros(self.dimension)
        for idx, val in self.featurize(text).items():
            out[idx] = val
        return out

    def matrix(self, texts: Sequence[str]) -> sp.csr_matrix:
        """Stack featurized texts into a CSR matrix of shape (len(texts), dimension)."""
        data: list[float] = []
        indices: list[int] = []
        indptr = [0]
        for text in texts:
            vec = self.featurize(text)
            for idx in sorted(vec):
                indices.append(idx)
                data.append(vec[idx])
            indptr.append(len(indices))
        return sp.csr_matrix((data, indices, indptr), shape=(len(texts), self.dimension))


@dataclass
class BinaryExpert:
    """A trained class-and-variant-specific binary classifier."""

    target_class: int
    variant: str
    featurizer: HashedTextFeaturizer
    weights: np.ndarray
    bias: float
    trained: bool = False
    seed: int = 0
    best_val_loss: float | None = None


def untrained_expert(target_class: int, featurizer: HashedTextFeaturizer, seed: int = 0) -> BinaryExpert:
    return BinaryExpert(
        target_class=target_class,
        variant=featurizer.variant,
        featurizer=featurizer,
        weights=np.zeros(featurizer.dimension),
        bias=0.0,
        trained=False,
        seed=seed,
    )


def binary_ce_loss_and_grads(
    X: sp.csr_matrix, k: np.ndarray, weights: np.ndarray, bias: float
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy of the logistic head plus its exact gradients."""
    logits = np.asarray(X @ weights).ravel() + bias
    # CE of sigmoid in stable form: softplus(logit) - k * logit
    loss = float(np.mean(np.logaddexp(0.0, logits) - k * logits))
    residual = sigmoid(logits) - k
    grad_w = np.asarray(X.T @ residual).ravel() / X.shape[0]
    grad_b = float(np.mean(residual))
    return loss, grad_w, grad_b


def binary_ce_loss(X: sp.csr_matrix, k: np.ndarray, weights: np.ndarray, bias: float) -> float:
    logits = np.asarray(X @ weights).ravel() + bias
    return float(np.mean(np.logaddexp(0.0, logits) - k * logits))


def train_expert(
    train_data: BinaryDataset,
    val_data: BinaryDataset,
    featurizer: HashedTextFeaturizer,
    config: TrainConfig,
    train_matrix: sp.csr_matrix | None = None,
    val_matrix: sp.csr_matrix | None = None,
) -> tuple[BinaryExpert, TrainingHistory]:
    """Fit one binary expert with the fine-grained checkpointing loop.

    The returned expert carries the best-validation-loss state, not the final
    one. Precomputed feature matrices may be passed when several experts share
    a featurizer over the same split (the rows must align with the items).
    Weight decay never touches the bias term.
    """
    if not train_data.items:
        raise ValueError("training split is empty")
    if not val_data.items:
        raise ValueError("validation split is empty")
    k_train = np.array(train_data.labels(), dtype=float)
    if k_train.min() == k_train.max():
        raise ValueError("training split contains a single class; need at least one positive and one negative")
    if not featurizer.fitted:
        featurizer.fit(train_data.texts())

    X_train = featurizer.matrix(train_data.texts()) if train_matrix is None else train_matrix
    X_val = featurizer.matrix(val_data.texts()) if val_matrix is None else val_matrix
    k_val = np.array(val_data.labels(), dtype=float)

    def loss_and_grads(params, batch):
        w, b = params
        Xb = X_train[batch]
        loss, grad_w, grad_b = binary_ce_loss_and_grads(Xb, k_train[batch], w, float(b[0]))
        return loss, [grad_w, np.array([grad_b])]

    def val_loss(params):
        w, b = params
        return binary_ce_loss(X_val, k_val, w, float(b[0]))

    init = [np.zeros(featurizer.dimension), np.zeros(1)]
    best_params, history = fit_minibatch_sgd(
        init, loss_and_grads, val_loss, len(train_data.items), config, decay_mask=[True, False]
    )
    expert = BinaryExpert(
        target_class=train_data.target_class,
        variant=featurizer.variant,
        featurizer=featurizer,
        weights=best_params[0],
        bias=float(best_params[1][0]),
        trained=True,
        seed=config.seed,
        best_val_loss=history.best.val_loss,
    )
    return expert, history


def positive_logit(expert: BinaryExpert, inp: FormattedInput) -> float:
    vec = expert.featurizer.featurize(inp.text)
    return float(sum(expert.weights[idx] * val for idx, val in vec.items()) + expert.bias)


def predict(expert: BinaryExpert, inp: FormattedInput) -> tuple[float, float]:
    """Return (negative, positive) probabilities; they sum to 1 exactly."""
    if not expert.trained:
        raise ValueError("expert is not trained")
    rho1 = float(sigmoid(positive_logit(expert, inp)))
    return 1.0 - rho1, rho1


def positive_probabilities(expert: BinaryExpert, X: sp.csr_matrix) -> np.ndarray:
    """Batch positive probabilities from a precomputed feature matrix."""
    if not expert.trained:
        raise ValueError("expert is not trained")
    logits = np.asarray(X @ expert.weights).ravel() + expert.bias
    return np.asarray(sigmoid(logits))


def token_attributions(expert: BinaryExpert, inp: FormattedInput) -> list[tuple[str, float]]:
    """Signed per-token contributions to the positive logit, in text order.

    The contributions plus the bias reconstruct the positive logit exactly:
    for a linear head over additive features this decomposition is the Shapley
    attribution with an all-zero baseline.
    """
    if not expert.trained:
        raise ValueError("expert is not trained")
    out = []
    for tok, incs in expert.featurizer.token_increments(inp.text):
        out.append((tok, float(sum(expert.weights[idx] * inc for idx, inc in incs))))
    return out
