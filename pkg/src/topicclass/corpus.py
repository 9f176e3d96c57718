"""Labeled corpora: ingestion, tokenization, vocabulary pruning, term matrices,
and stratified train/test splits.

All types are immutable after construction and safe to share across threads.
File formats:

* corpus: JSON-lines, one ``{"id": ..., "text": ..., "label": ...}`` per line
  (alternatively a directory of ``.txt`` files plus a two-column ``id,label``
  CSV, see :func:`read_corpus_dir`);
* vocabulary: UTF-8 text, one term per line in index order, with an optional
  ``.meta.json`` sidecar carrying document frequencies for tf-idf weighting;
* term matrix: JSON-lines with a leading header object, one row per document.
"""
from __future__ import annotations

import csv
import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .jsonio import canonical_json, sha256_text
from .stopwords import ENGLISH_STOPWORDS

POSITIVE = "positive"
NEGATIVE = "negative"
LABELS = (POSITIVE, NEGATIVE)

WEIGHTINGS = ("count", "tf", "tfidf")

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class CorpusError(ValueError):
    """Malformed corpus data or an operation precondition violation."""


class EmptyVocabularyError(CorpusError):
    """Pruning thresholds removed every candidate term."""


def tokenize(text: str) -> list[str]:
    """Lowercase ``text``, split on any non-alphanumeric character, and drop
    tokens shorter than two characters."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


@dataclass(frozen=True)
class Document:
    """One raw text with a stable identifier and an optional binary label."""

    id: str
    text: str
    label: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("document id must be a non-empty string")
        if self.label is not None and self.label not in LABELS:
            raise CorpusError(
                f"document {self.id!r}: label must be one of {LABELS}, got {self.label!r}"
            )


@dataclass(frozen=True)
class Corpus:
    """An ordered collection of documents with unique ids."""

    documents: tuple[Document, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "documents", tuple(self.documents))
        seen: set[str] = set()
        for doc in self.documents:
            if doc.id in seen:
                raise CorpusError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    @cached_property
    def class_counts(self) -> dict[str, int]:
        counts = {label: 0 for label in LABELS}
        for doc in self.documents:
            if doc.label is not None:
                counts[doc.label] += 1
        return counts

    def labels(self) -> list[str]:
        """Labels in document order; raises if any document is unlabeled."""
        out = []
        for doc in self.documents:
            if doc.label is None:
                raise CorpusError(f"document {doc.id!r} has no label")
            out.append(doc.label)
        return out

    def positive_ratio(self) -> float:
        counts = self.class_counts
        total = counts[POSITIVE] + counts[NEGATIVE]
        if total == 0:
            raise CorpusError("corpus has no labeled documents")
        return counts[POSITIVE] / total


@dataclass(frozen=True)
class Vocabulary:
    """Pruned token index: terms in lexicographic order plus the document
    frequencies they were built with (needed for tf-idf)."""

    terms: tuple[str, ...]
    doc_freq: Mapping[str, int]
    n_docs: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))

    def __len__(self) -> int:
        return len(self.terms)

    @cached_property
    def index(self) -> dict[str, int]:
        return {term: i for i, term in enumerate(self.terms)}

    def content_hash(self) -> str:
        """Hash of the persisted text form; ties matrices and models to the
        exact vocabulary they were built with."""
        return sha256_text("\n".join(self.terms) + "\n")


@dataclass(frozen=True)
class DocTermMatrix:
    """Sparse per-document term weights, row order matching the source corpus.

    Each row is a tuple of ``(term index, weight)`` pairs sorted by index.
    Weights are ints for ``count`` weighting and floats otherwise.
    """

    rows: tuple[tuple[tuple[int, float], ...], ...]
    weighting: str
    n_terms: int
    doc_ids: tuple[str, ...]
    doc_labels: tuple[str | None, ...]
    vocab_hash: str

    def __post_init__(self) -> None:
        if self.weighting not in WEIGHTINGS:
            raise CorpusError(f"unknown weighting {self.weighting!r}")
        if not (len(self.rows) == len(self.doc_ids) == len(self.doc_labels)):
            raise CorpusError("rows, doc_ids and doc_labels must align")
        for row in self.rows:
            for idx, weight in row:
                if not 0 <= idx < self.n_terms:
                    raise CorpusError(f"term index {idx} out of range")
                if weight < 0:
                    raise CorpusError("negative term weight")

    def __len__(self) -> int:
        return len(self.rows)

    def labels(self) -> list[str]:
        out = []
        for doc_id, label in zip(self.doc_ids, self.doc_labels):
            if label is None:
                raise CorpusError(f"document {doc_id!r} has no label")
            out.append(label)
        return out

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((len(self.rows), self.n_terms), dtype=np.float64)
        for i, row in enumerate(self.rows):
            for idx, weight in row:
                dense[i, idx] = weight
        return dense


@dataclass(frozen=True)
class SplitSpec:
    """Train fraction and RNG seed for a stratified randomized split."""

    train_fraction: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise CorpusError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )


def build_vocabulary(
    corpus: Corpus,
    min_df: int = 3,
    max_df_ratio: float = 0.5,
    stoplist: Iterable[str] | None = None,
    allowlist: Iterable[str] | None = None,
) -> Vocabulary:
    """Build the pruned vocabulary of a corpus.

    Keeps exactly the tokens whose document frequency satisfies
    ``min_df <= df <= max_df_ratio * len(corpus)``, excluding ``stoplist``
    (the built-in English list when None) and, if ``allowlist`` is given,
    restricted to it. Terms are ordered lexicographically.
    """
    if len(corpus) == 0:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    if not 0.0 < max_df_ratio <= 1.0:
        raise CorpusError(f"max_df_ratio must be in (0, 1], got {max_df_ratio}")
    if min_df < 1:
        raise CorpusError(f"min_df must be >= 1, got {min_df}")

    stop = ENGLISH_STOPWORDS if stoplist is None else frozenset(stoplist)
    allow = frozenset(allowlist) if allowlist is not None else None

    df: Counter[str] = Counter()
    for doc in corpus:
        df.update(set(tokenize(doc.text)))

    max_df = max_df_ratio * len(corpus)
    terms = sorted(
        term
        for term, freq in df.items()
        if min_df <= freq <= max_df
        and term not in stop
        and (allow is None or term in allow)
    )
    if not terms:
        raise EmptyVocabularyError(
            "pruning removed every term; relax min_df/max_df_ratio or the stoplist"
        )
    return Vocabulary(
        terms=tuple(terms),
        doc_freq={t: df[t] for t in terms},
        n_docs=len(corpus),
    )


def vectorize(corpus: Corpus, vocab: Vocabulary, weighting: str = "count") -> DocTermMatrix:
    """Produce the sparse document-term matrix of ``corpus`` under ``vocab``.

    Out-of-vocabulary tokens are ignored. ``tf`` divides counts by the number
    of in-vocabulary tokens in the document; ``tfidf`` multiplies tf by
    ``ln(N/df)`` with N and df taken from the vocabulary (so idf always comes
    from the corpus the vocabulary was built on, not the one being vectorized).
    """
    if weighting not in WEIGHTINGS:
        raise CorpusError(f"unknown weighting {weighting!r}")
    if weighting == "tfidf" and not vocab.doc_freq:
        raise CorpusError("tfidf weighting needs a vocabulary with document frequencies")

    index = vocab.index
    rows = []
    for doc in corpus:
        counts: Counter[int] = Counter()
        for token in tokenize(doc.text):
            idx = index.get(token)
            if idx is not None:
                counts[idx] += 1
        total = sum(counts.values())
        if weighting == "count":
            row = tuple((idx, counts[idx]) for idx in sorted(counts))
        elif weighting == "tf":
            row = tuple((idx, counts[idx] / total) for idx in sorted(counts))
        else:
            row = tuple(
                (
                    idx,
                    counts[idx]
                    / total
                    * math.log(vocab.n_docs / vocab.doc_freq[vocab.terms[idx]]),
                )
                for idx in sorted(counts)
            )
        rows.append(row)
    return DocTermMatrix(
        rows=tuple(rows),
        weighting=weighting,
        n_terms=len(vocab),
        doc_ids=tuple(doc.id for doc in corpus),
        doc_labels=tuple(doc.label for doc in corpus),
        vocab_hash=vocab.content_hash(),
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Randomized stratified partition into (train, test).

    Each class contributes ``round(train_fraction * class count)`` documents
    to the train side (half-up rounding); a class that would contribute zero
    is an error. Identical seeds reproduce identical splits; both sides keep
    the original corpus order.
    """
    labels = corpus.labels()
    by_class: dict[str, list[int]] = {label: [] for label in LABELS}
    for i, label in enumerate(labels):
        by_class[label].append(i)
    for label, members in by_class.items():
        if not members:
            raise CorpusError(f"class {label!r} has no documents")

    rng = np.random.default_rng(spec.seed)
    train_idx: set[int] = set()
    for label in LABELS:
        members = by_class[label]
        n_train = _round_half_up(spec.train_fraction * len(members))
        if n_train == 0:
            raise CorpusError(
                f"class {label!r} would receive 0 training documents at "
                f"fraction {spec.train_fraction}"
            )
        order = rng.permutation(len(members))
        train_idx.update(members[j] for j in order[:n_train])

    train_docs = tuple(doc for i, doc in enumerate(corpus) if i in train_idx)
    test_docs = tuple(doc for i, doc in enumerate(corpus) if i not in train_idx)
    return Corpus(train_docs), Corpus(test_docs)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def write_corpus_jsonl(corpus: Corpus, path: str | Path) -> None:
    lines = [
        canonical_json({"id": doc.id, "label": doc.label, "text": doc.text})
        for doc in corpus
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_corpus_jsonl(path: str | Path) -> Corpus:
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise CorpusError(f"{path}:{lineno}: expected object with id/text/label")
            docs.append(
                Document(id=str(obj["id"]), text=str(obj["text"]), label=obj.get("label"))
            )
    return Corpus(tuple(docs))


def read_corpus_dir(directory: str | Path, labels_csv: str | Path | None = None) -> Corpus:
    """Read a directory of ``<id>.txt`` files plus a two-column ``id,label`` CSV
    (default ``labels.csv`` inside the directory)."""
    directory = Path(directory)
    if labels_csv is None:
        labels_csv = directory / "labels.csv"
    labels: dict[str, str] = {}
    with open(labels_csv, "r", encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            if row[0].strip() == "id" and len(row) > 1 and row[1].strip() == "label":
                continue  # header row
            if len(row) < 2:
                raise CorpusError(f"{labels_csv}: expected two columns, got {row!r}")
            labels[row[0].strip()] = row[1].strip()
    docs = []
    for txt in sorted(directory.glob("*.txt")):
        doc_id = txt.stem
        if doc_id not in labels:
            raise CorpusError(f"no label for document {doc_id!r} in {labels_csv}")
        docs.append(Document(id=doc_id, text=txt.read_text(encoding="utf-8"), label=labels[doc_id]))
    if not docs:
        raise CorpusError(f"no .txt documents found in {directory}")
    return Corpus(tuple(docs))


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write the vocabulary as one term per line, plus a ``.meta.json`` sidecar
    with document frequencies (required to re-vectorize with tf-idf)."""
    path = Path(path)
    path.write_text("\n".join(vocab.terms) + "\n", encoding="utf-8")
    meta = {
        "format": "vocabulary-meta",
        "version": 1,
        "n_docs": vocab.n_docs,
        "doc_freq": {t: vocab.doc_freq[t] for t in vocab.terms},
    }
    path.with_suffix(path.suffix + ".meta.json").write_text(
        canonical_json(meta) + "\n", encoding="utf-8"
    )


def load_vocabulary(path: str | Path) -> Vocabulary:
    path = Path(path)
    terms = tuple(
        line for line in path.read_text(encoding="utf-8").splitlines() if line
    )
    if not terms:
        raise CorpusError(f"{path}: empty vocabulary file")
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    doc_freq: dict[str, int] = {}
    n_docs = 0
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if meta.get("format") != "vocabulary-meta" or "version" not in meta:
            raise CorpusError(f"{meta_path}: not a vocabulary metadata file")
        doc_freq = {str(k): int(v) for k, v in meta["doc_freq"].items()}
        n_docs = int(meta["n_docs"])
    return Vocabulary(terms=terms, doc_freq=doc_freq, n_docs=n_docs)


def write_matrix_jsonl(matrix: DocTermMatrix, path: str | Path) -> None:
    header = canonical_json(
        {
            "format": "doc-term-matrix",
            "version": 1,
            "weighting": matrix.weighting,
            "n_terms": matrix.n_terms,
            "vocab_hash": matrix.vocab_hash,
        }
    )
    lines = [header]
    for doc_id, label, row in zip(matrix.doc_ids, matrix.doc_labels, matrix.rows):
        lines.append(
            canonical_json(
                {"id": doc_id, "label": label, "entries": [[i, w] for i, w in row]}
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix_jsonl(path: str | Path) -> DocTermMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise CorpusError(f"{path}: empty matrix file")
    header = json.loads(lines[0])
    if header.get("format") != "doc-term-matrix" or "version" not in header:
        raise CorpusError(f"{path}: not a document-term matrix file")
    weighting = header["weighting"]
    rows, ids, labels = [], [], []
    for line in lines[1:]:
        obj = json.loads(line)
        ids.append(str(obj["id"]))
        labels.append(obj.get("label"))
        entries = obj["entries"]
        if weighting == "count":
            rows.append(tuple((int(i), int(w)) for i, w in entries))
        else:
            rows.append(tuple((int(i), float(w)) for i, w in entries))
    return DocTermMatrix(
        rows=tuple(rows),
        weighting=weighting,
        n_terms=int(header["n_terms"]),
        doc_ids=tuple(ids),
        doc_labels=tuple(labels),
        vocab_hash=str(header["vocab_hash"]),
    )
