"""LDA topic model: collapsed Gibbs training, fold-in inference for held-out
documents, and the dimension-reduction report.

Topic distributions use the standard smoothed estimators: a topic's word
distribution is ``(n_tw + beta) / (n_t + V*beta)`` and a document's topic
distribution is ``(n_dt + alpha) / (len_d + K*alpha)``; document distributions
are averaged over post-burn-in sweeps. Models persist as a single JSON
document holding the config, the vocabulary hash, and the topic-word counts
in sparse triplet form; the word distributions are recomputed on load.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _gibbs
from .corpus import DocTermMatrix
from .jsonio import canonical_json, sha256_text

FORMAT_NAME = "lda-model"
FORMAT_VERSION = 1


class TopicModelError(ValueError):
    """Invalid sampler configuration or input."""


@dataclass(frozen=True)
class LdaConfig:
    """Sampler hyperparameters. ``alpha=None`` means the conventional 50/K."""

    topics: int
    alpha: float | None = None
    beta: float = 0.01
    train_iterations: int = 1000
    burn_in: int = 200
    infer_iterations: int = 100
    infer_burn_in: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.topics < 2:
            raise TopicModelError(f"topics must be >= 2, got {self.topics}")
        if self.alpha is not None and self.alpha <= 0:
            raise TopicModelError(f"alpha must be > 0, got {self.alpha}")
        if self.beta <= 0:
            raise TopicModelError(f"beta must be > 0, got {self.beta}")
        if not 0 <= self.burn_in < self.train_iterations:
            raise TopicModelError("need train_iterations > burn_in >= 0")
        if not 0 <= self.infer_burn_in < self.infer_iterations:
            raise TopicModelError("need infer_iterations > infer_burn_in >= 0")

    @property
    def effective_alpha(self) -> float:
        return 50.0 / self.topics if self.alpha is None else self.alpha

    def to_dict(self) -> dict:
        return {
            "topics": self.topics,
            "alpha": self.alpha,
            "beta": self.beta,
            "train_iterations": self.train_iterations,
            "burn_in": self.burn_in,
            "infer_iterations": self.infer_iterations,
            "infer_burn_in": self.infer_burn_in,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(data: dict) -> "LdaConfig":
        return LdaConfig(
            topics=int(data["topics"]),
            alpha=None if data.get("alpha") is None else float(data["alpha"]),
            beta=float(data["beta"]),
            train_iterations=int(data["train_iterations"]),
            burn_in=int(data["burn_in"]),
            infer_iterations=int(data["infer_iterations"]),
            infer_burn_in=int(data["infer_burn_in"]),
            seed=int(data["seed"]),
        )


@dataclass(frozen=True)
class LdaModel:
    """A fitted topic model: frozen topic-word counts plus the config.

    The count matrix is read-only; fold-in inference can never mutate it
    (attempting to would be a compile-time error in the sampling kernels).
    """

    topic_word_counts: np.ndarray  # (K, V) int64
    vocab_size: int
    config: LdaConfig
    vocab_hash: str
    sweep_token_totals: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        counts = np.asarray(self.topic_word_counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape != (self.config.topics, self.vocab_size):
            raise TopicModelError("topic_word_counts must be (topics, vocab_size)")
        if (counts < 0).any():
            raise TopicModelError("negative topic-word count")
        counts = counts.copy()
        counts.setflags(write=False)
        object.__setattr__(self, "topic_word_counts", counts)

    @property
    def topics(self) -> int:
        return self.config.topics

    @cached_property
    def topic_totals(self) -> np.ndarray:
        totals = self.topic_word_counts.sum(axis=1)
        totals.setflags(write=False)
        return totals

    @cached_property
    def phi(self) -> np.ndarray:
        """Topic-word distributions, rows summing to 1."""
        beta = self.config.beta
        dist = (self.topic_word_counts + beta) / (
            self.topic_totals[:, None] + self.vocab_size * beta
        )
        dist.setflags(write=False)
        return dist

    def content_hash(self) -> str:
        return sha256_text(canonical_json(model_to_dict(self)))


def _flatten(matrix: DocTermMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Expand sparse count rows into flat token / document-index arrays."""
    doc_lens = np.zeros(len(matrix), dtype=np.int64)
    tokens: list[int] = []
    doc_of_token: list[int] = []
    for d, row in enumerate(matrix.rows):
        for idx, count in row:
            count = int(count)
            tokens.extend([idx] * count)
            doc_of_token.extend([d] * count)
            doc_lens[d] += count
    return (
        np.asarray(tokens, dtype=np.int32),
        np.asarray(doc_of_token, dtype=np.int32),
        doc_lens,
    )


def train_lda(
    matrix: DocTermMatrix,
    config: LdaConfig,
    audit_counts: bool = False,
) -> tuple[LdaModel, np.ndarray]:
    """Fit LDA by collapsed Gibbs sampling on integer term counts.

    Returns the fitted model and the per-document topic distributions
    (one row per matrix row, averaged over post-burn-in sweeps). With
    ``audit_counts`` the sampler verifies token-count conservation after
    every sweep and records the running totals on the model.
    """
    if matrix.weighting != "count":
        raise TopicModelError(
            f"LDA requires count weighting, got {matrix.weighting!r}"
        )
    if len(matrix) == 0:
        raise TopicModelError("cannot train on an empty matrix")
    if config.topics > matrix.n_terms:
        raise TopicModelError(
            f"topics ({config.topics}) cannot exceed vocabulary size ({matrix.n_terms})"
        )
    for d, row in enumerate(matrix.rows):
        if sum(c for _, c in row) < 1:
            raise TopicModelError(
                f"document {matrix.doc_ids[d]!r} has no tokens; drop it before training"
            )

    tokens, doc_of_token, doc_lens = _flatten(matrix)
    total_tokens = int(tokens.shape[0])
    n_docs = len(matrix)
    k = config.topics
    alpha = config.effective_alpha
    beta = config.beta

    state = _gibbs.make_state(config.seed)
    z, n_dt, n_wt, n_t = _gibbs.init_assignments(
        tokens, doc_of_token, n_docs, k, matrix.n_terms, state
    )

    theta_acc = np.zeros((n_docs, k), dtype=np.float64)
    theta_denom = doc_lens[:, None] + k * alpha
    audit_totals: list[int] = []
    for sweep in range(config.train_iterations):
        _gibbs.train_sweep(tokens, doc_of_token, z, n_dt, n_wt, n_t, alpha, beta, state)
        if audit_counts:
            sweep_total = int(n_t.sum())
            if (
                sweep_total != total_tokens
                or int(n_dt.sum()) != total_tokens
                or int(n_wt.sum()) != total_tokens
            ):
                raise TopicModelError(
                    f"count conservation violated at sweep {sweep}"
                )
            audit_totals.append(sweep_total)
        if sweep >= config.burn_in:
            theta_acc += (n_dt + alpha) / theta_denom

    thetas = theta_acc / (config.train_iterations - config.burn_in)
    model = LdaModel(
        topic_word_counts=n_wt,
        vocab_size=matrix.n_terms,
        config=config,
        vocab_hash=matrix.vocab_hash,
        sweep_token_totals=tuple(audit_totals) if audit_counts else None,
    )
    return model, thetas


def infer_topics(
    model: LdaModel,
    doc: Sequence[tuple[int, int]],
    config: LdaConfig | None = None,
    seed: int | None = None,
) -> np.ndarray:
    """Infer a held-out document's topic distribution by fold-in Gibbs.

    ``doc`` is a sparse count row of ``(term index, count)`` pairs, already
    projected onto the model's vocabulary. The model's counts are held fixed;
    only the document's own assignments are resampled. The result is averaged
    over post-burn-in sweeps and is deterministic given the seed.
    """
    cfg = model.config if config is None else config
    entries = [(int(i), int(c)) for i, c in doc]
    for idx, count in entries:
        if not 0 <= idx < model.vocab_size:
            raise TopicModelError(f"term index {idx} outside model vocabulary")
        if count < 1:
            raise TopicModelError(f"non-positive count for term index {idx}")
    if not entries:
        raise TopicModelError(
            "document has no in-vocabulary tokens; cannot infer a topic distribution"
        )

    tokens = np.asarray(
        [idx for idx, count in entries for _ in range(count)], dtype=np.int32
    )
    k = model.topics
    alpha = cfg.effective_alpha
    beta = model.config.beta

    state = _gibbs.make_state(cfg.seed if seed is None else seed)
    z, n_dk = _gibbs.foldin_init(tokens, k, state)

    theta_acc = np.zeros(k, dtype=np.float64)
    denom = tokens.shape[0] + k * alpha
    for sweep in range(cfg.infer_iterations):
        _gibbs.foldin_sweep(
            tokens, z, n_dk, model.topic_word_counts, model.topic_totals,
            alpha, beta, state,
        )
        if sweep >= cfg.infer_burn_in:
            theta_acc += (n_dk + alpha) / denom
    return theta_acc / (cfg.infer_iterations - cfg.infer_burn_in)


def dimension_reduction(attribute_count: int, topic_count: int) -> float:
    """Percentage drop from ``attribute_count`` features to ``topic_count``."""
    if attribute_count <= 0:
        raise TopicModelError(f"attribute count must be > 0, got {attribute_count}")
    if topic_count < 0:
        raise TopicModelError(f"topic count must be >= 0, got {topic_count}")
    if topic_count > attribute_count:
        raise TopicModelError(
            f"topic count ({topic_count}) exceeds attribute count ({attribute_count}); "
            "no reduction is possible"
        )
    return 100.0 * (attribute_count - topic_count) / attribute_count


def top_words(model: LdaModel, terms: Sequence[str], topic: int, n: int) -> list[str]:
    """The ``n`` highest-probability terms of a topic, ties broken
    lexicographically. ``n`` larger than the vocabulary returns all terms."""
    if not 0 <= topic < model.topics:
        raise TopicModelError(f"topic {topic} out of range")
    if len(terms) != model.vocab_size:
        raise TopicModelError(
            f"vocabulary size {len(terms)} does not match model ({model.vocab_size})"
        )
    if n <= 0:
        return []
    weights = model.phi[topic]
    order = sorted(range(model.vocab_size), key=lambda w: (-weights[w], terms[w]))
    return [terms[w] for w in order[: min(n, model.vocab_size)]]


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def model_to_dict(model: LdaModel) -> dict:
    triplets = []
    counts = model.topic_word_counts
    for t, w in zip(*np.nonzero(counts)):
        triplets.append([int(t), int(w), int(counts[t, w])])
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "vocab_hash": model.vocab_hash,
        "vocab_size": model.vocab_size,
        "topic_word_counts": triplets,
    }


def model_from_dict(data: dict) -> LdaModel:
    if data.get("format") != FORMAT_NAME:
        raise TopicModelError("not an LDA model document")
    if "version" not in data:
        raise TopicModelError("model document is missing the version field")
    if int(data["version"]) != FORMAT_VERSION:
        raise TopicModelError(f"unsupported model version {data['version']}")
    config = LdaConfig.from_dict(data["config"])
    vocab_size = int(data["vocab_size"])
    counts = np.zeros((config.topics, vocab_size), dtype=np.int64)
    for t, w, c in data["topic_word_counts"]:
        counts[int(t), int(w)] = int(c)
    return LdaModel(
        topic_word_counts=counts,
        vocab_size=vocab_size,
        config=config,
        vocab_hash=str(data["vocab_hash"]),
    )


def save_model(model: LdaModel, path: str | Path) -> None:
    Path(path).write_text(canonical_json(model_to_dict(model)) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> LdaModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
