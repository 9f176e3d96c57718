"""Synthetic labeled corpora for testing the pipeline end to end.

The main generator samples documents from the LDA generative process with a
planted class topic: positive documents draw their topic mixture from a prior
whose class-topic concentration is multiplied by a boost factor, so a boost of
1.0 yields a null corpus whose labels carry no signal. A second generator
builds the harder-edged two-cluster corpus (disjoint half-vocabularies) used
to verify topic recovery.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Document, NEGATIVE, POSITIVE


class SyntheticSpecError(ValueError):
    """Inconsistent generator parameters."""


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the planted-topic generator.

    ``theta_alpha`` is the symmetric Dirichlet concentration of the
    document-topic prior and ``word_alpha`` of the topic-word distributions;
    the positive class's prior has its ``class_topic`` component multiplied by
    ``class_topic_boost``.
    """

    topics: int = 10
    vocab_size: int = 500
    n_docs: int = 1000
    doc_len: int = 50
    positive_ratio: float = 0.125
    class_topic: int = 0
    class_topic_boost: float = 5.0
    seed: int = 0
    theta_alpha: float = 1.0
    word_alpha: float = 0.05

    def __post_init__(self) -> None:
        if self.topics < 2:
            raise SyntheticSpecError(f"topics must be >= 2, got {self.topics}")
        if self.vocab_size < self.topics:
            raise SyntheticSpecError("vocab_size must be >= topics")
        if self.n_docs < 2:
            raise SyntheticSpecError(f"n_docs must be >= 2, got {self.n_docs}")
        if self.doc_len < 1:
            raise SyntheticSpecError(f"doc_len must be >= 1, got {self.doc_len}")
        if not 0.0 < self.positive_ratio < 1.0:
            raise SyntheticSpecError(
                f"positive_ratio must be in (0, 1), got {self.positive_ratio}"
            )
        if not 0 <= self.class_topic < self.topics:
            raise SyntheticSpecError(f"class_topic must be < topics")
        if self.class_topic_boost <= 0:
            raise SyntheticSpecError("class_topic_boost must be > 0")
        if self.theta_alpha <= 0 or self.word_alpha <= 0:
            raise SyntheticSpecError("concentration parameters must be > 0")


def _term_string(index: int, width: int) -> str:
    return f"w{index:0{width}d}"


def _doc_text(word_ids: np.ndarray, width: int) -> str:
    return " ".join(_term_string(int(w), width) for w in word_ids)


def generate_synthetic_corpus(spec: SyntheticSpec) -> Corpus:
    """Sample a labeled corpus from the LDA generative process.

    Exactly ``round(positive_ratio * n_docs)`` documents are positive; the
    label assignment and all draws are deterministic given the seed. Document
    lengths are Poisson around ``doc_len`` with a minimum of one token.
    """
    rng = np.random.default_rng(spec.seed)
    width = max(4, len(str(spec.vocab_size - 1)))

    topic_word = np.vstack(
        [
            rng.dirichlet(np.full(spec.vocab_size, spec.word_alpha))
            for _ in range(spec.topics)
        ]
    )

    n_pos = int(math.floor(spec.positive_ratio * spec.n_docs + 0.5))
    if not 0 < n_pos < spec.n_docs:
        raise SyntheticSpecError(
            f"positive_ratio {spec.positive_ratio} leaves no documents for one class"
        )
    labels = np.array([POSITIVE] * n_pos + [NEGATIVE] * (spec.n_docs - n_pos), dtype=object)
    rng.shuffle(labels)

    base_prior = np.full(spec.topics, spec.theta_alpha)
    pos_prior = base_prior.copy()
    pos_prior[spec.class_topic] *= spec.class_topic_boost

    docs = []
    for i in range(spec.n_docs):
        prior = pos_prior if labels[i] == POSITIVE else base_prior
        theta = rng.dirichlet(prior)
        length = max(1, int(rng.poisson(spec.doc_len)))
        topics = rng.choice(spec.topics, size=length, p=theta)
        words = np.empty(length, dtype=np.int64)
        for j, topic in enumerate(topics):
            words[j] = rng.choice(spec.vocab_size, p=topic_word[topic])
        docs.append(
            Document(
                id=f"synth-{i:05d}",
                text=_doc_text(words, width),
                label=str(labels[i]),
            )
        )
    return Corpus(tuple(docs))


def generate_two_cluster_corpus(
    vocab_size: int = 200,
    n_docs: int = 400,
    doc_len: int = 40,
    seed: int = 0,
    positive_ratio: float = 0.5,
) -> Corpus:
    """A corpus of two hard clusters over disjoint half-vocabularies.

    Positive documents draw tokens uniformly from the first half of the
    vocabulary, negative documents from the second half, so a two-topic model
    should align its topics with the halves almost perfectly.
    """
    if vocab_size % 2 != 0 or vocab_size < 4:
        raise SyntheticSpecError("vocab_size must be an even number >= 4")
    if not 0.0 < positive_ratio < 1.0:
        raise SyntheticSpecError(f"positive_ratio must be in (0, 1), got {positive_ratio}")
    rng = np.random.default_rng(seed)
    width = max(4, len(str(vocab_size - 1)))
    half = vocab_size // 2

    n_pos = int(math.floor(positive_ratio * n_docs + 0.5))
    if not 0 < n_pos < n_docs:
        raise SyntheticSpecError("positive_ratio leaves no documents for one class")
    labels = np.array([POSITIVE] * n_pos + [NEGATIVE] * (n_docs - n_pos), dtype=object)
    rng.shuffle(labels)

    docs = []
    for i in range(n_docs):
        length = max(1, int(rng.poisson(doc_len)))
        low, high = (0, half) if labels[i] == POSITIVE else (half, vocab_size)
        words = rng.integers(low, high, size=length)
        docs.append(
            Document(
                id=f"cluster-{i:05d}",
                text=_doc_text(words, width),
                label=str(labels[i]),
            )
        )
    return Corpus(tuple(docs))
