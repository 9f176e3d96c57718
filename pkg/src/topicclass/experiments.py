"""End-to-end experiment pipelines and the full evaluation grid.

``run_experiment`` reproduces the experimental protocol: stratified split,
preprocessing and model fitting on the training side only, fold-in inference
for test documents, prediction, and positive-class metrics. ``sweep`` runs
the cartesian grid of training fractions x topic counts x classifiers x
seeds, emitting one row per cell as CSV and JSON-lines.

The default pipeline never lets test-set information reach any fitted
artifact; ``fit_on_all`` is the explicit escape hatch that fits the
vocabulary and topic model on train+test jointly (classifier training and
evaluation stay split). Raw bag-of-words pipelines ignore the flag.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import (
    Corpus,
    SplitSpec,
    build_vocabulary,
    stratified_split,
    vectorize,
)
from .evaluation import ConfusionMatrix, Metrics, confusion, macro_metrics, metrics
from .jsonio import canonical_json, derive_seed
from .topic_classifiers import (
    ALL_CLASSIFIERS,
    ClassifierError,
    RAW_CLASSIFIERS,
    predict_atc,
    predict_ctc,
    predict_raw,
    predict_stc,
    predict_tvc,
    train_atc,
    train_ctc,
    train_raw,
    train_stc,
    train_tvc,
)
from .topic_model import LdaConfig, dimension_reduction, infer_topics, train_lda

PAPER_FRACTIONS = (0.75, 0.66, 0.50, 0.34, 0.25)
PAPER_TOPIC_COUNTS = (5, 10, 25, 50, 75, 100, 125, 150)


@dataclass(frozen=True)
class PreprocessConfig:
    """Vocabulary pruning thresholds and the raw-pipeline weighting."""

    min_df: int = 3
    max_df_ratio: float = 0.5
    stoplist: frozenset[str] | None = None
    allowlist: frozenset[str] | None = None
    raw_weighting: str = "tfidf"


@dataclass(frozen=True)
class PipelineSpec:
    """Everything run_experiment needs besides the corpus and the split."""

    classifier: str
    lda: LdaConfig | None = None
    preprocess: PreprocessConfig = PreprocessConfig()
    threshold_mode: str = "prior-quantile"
    support_mode: str = "fractional"
    fit_on_all: bool = False
    svm_c: float = 1.0
    svm_tolerance: float = 1e-3
    svm_max_passes: int = 10
    tree_min_leaf: int = 2
    tree_max_depth: int = 25

    def __post_init__(self) -> None:
        if self.classifier not in ALL_CLASSIFIERS:
            raise ClassifierError(
                f"unknown classifier {self.classifier!r}; expected one of {ALL_CLASSIFIERS}"
            )
        if self.classifier not in RAW_CLASSIFIERS and self.lda is None:
            raise ClassifierError(
                f"classifier {self.classifier!r} needs an LDA configuration"
            )


@dataclass(frozen=True)
class ExperimentResult:
    classifier: str
    metrics: Metrics
    macro: Metrics
    confusion: ConfusionMatrix
    vocab_size: int
    vocab_hash: str
    model_hash: str | None
    n_train: int
    n_test: int


def _train_topic_classifier(spec: PipelineSpec, thetas: np.ndarray, labels: list[str], seed: int):
    clf_seed = derive_seed(seed, "classifier")
    if spec.classifier == "atc":
        positive_ratio = labels.count("positive") / len(labels)
        return train_atc(
            thetas, labels, positive_ratio,
            threshold_mode=spec.threshold_mode, seed=clf_seed,
        )
    if spec.classifier == "ctc":
        return train_ctc(
            thetas, labels,
            threshold_mode=spec.threshold_mode,
            support_mode=spec.support_mode,
            seed=clf_seed,
        )
    if spec.classifier == "stc":
        return train_stc(thetas, labels)
    learner = spec.classifier.split("-", 1)[1]
    return train_tvc(
        thetas, labels, learner=learner, seed=clf_seed,
        svm_c=spec.svm_c, svm_tolerance=spec.svm_tolerance,
        svm_max_passes=spec.svm_max_passes,
        tree_min_leaf=spec.tree_min_leaf, tree_max_depth=spec.tree_max_depth,
    )


def _predict_topic_classifier(spec: PipelineSpec, model, theta: np.ndarray) -> str:
    if spec.classifier == "atc":
        return predict_atc(model, theta)
    if spec.classifier == "ctc":
        return predict_ctc(model, theta)
    if spec.classifier == "stc":
        return predict_stc(model, theta)
    return predict_tvc(model, theta)


def run_on_split(
    train: Corpus, test: Corpus, spec: PipelineSpec, seed: int
) -> ExperimentResult:
    """Fit on ``train``, predict ``test``, score against its labels.

    The returned result carries the content hashes of the train-derived
    vocabulary and topic model so leakage checks can assert they are
    independent of the test set.
    """
    train_labels = train.labels()
    test_labels = test.labels()
    pp = spec.preprocess

    fit_corpus = train
    if spec.fit_on_all and spec.classifier not in RAW_CLASSIFIERS:
        fit_corpus = Corpus(tuple(train.documents) + tuple(test.documents))

    vocab = build_vocabulary(
        fit_corpus,
        min_df=pp.min_df,
        max_df_ratio=pp.max_df_ratio,
        stoplist=pp.stoplist,
        allowlist=pp.allowlist,
    )

    if spec.classifier in RAW_CLASSIFIERS:
        learner = spec.classifier.split("-", 1)[1]
        train_features = vectorize(train, vocab, pp.raw_weighting).to_dense()
        test_features = vectorize(test, vocab, pp.raw_weighting).to_dense()
        model = train_raw(
            train_features, train_labels, weighting=pp.raw_weighting,
            learner=learner, seed=derive_seed(seed, "classifier"),
            svm_c=spec.svm_c, svm_tolerance=spec.svm_tolerance,
            svm_max_passes=spec.svm_max_passes,
            tree_min_leaf=spec.tree_min_leaf, tree_max_depth=spec.tree_max_depth,
        )
        predicted = [predict_raw(model, row) for row in test_features]
        model_hash = None
    else:
        lda_config = replace(spec.lda, seed=derive_seed(seed, "lda"))
        if spec.fit_on_all:
            fit_matrix = vectorize(fit_corpus, vocab, "count")
            lda_model, thetas = train_lda(fit_matrix, lda_config)
            train_thetas = thetas[: len(train)]
            test_thetas = thetas[len(train):]
        else:
            train_matrix = vectorize(train, vocab, "count")
            lda_model, train_thetas = train_lda(train_matrix, lda_config)
            test_matrix = vectorize(test, vocab, "count")
            test_thetas = np.vstack(
                [
                    infer_topics(
                        lda_model, row, seed=derive_seed(seed, "infer", doc_id)
                    )
                    for doc_id, row in zip(test_matrix.doc_ids, test_matrix.rows)
                ]
            )
        clf = _train_topic_classifier(spec, train_thetas, train_labels, seed)
        predicted = [_predict_topic_classifier(spec, clf, theta) for theta in test_thetas]
        model_hash = lda_model.content_hash()

    cm = confusion(predicted, test_labels)
    return ExperimentResult(
        classifier=spec.classifier,
        metrics=metrics(cm),
        macro=macro_metrics(cm),
        confusion=cm,
        vocab_size=len(vocab),
        vocab_hash=vocab.content_hash(),
        model_hash=model_hash,
        n_train=len(train),
        n_test=len(test),
    )


def run_experiment(
    corpus: Corpus,
    split_spec: SplitSpec,
    spec: PipelineSpec,
    seed: int | None = None,
) -> ExperimentResult:
    """Split the corpus and evaluate one pipeline on the held-out side.

    ``seed`` (default: the split spec's seed) drives every random stage:
    the split itself, the sampler, per-document fold-in, and classifier
    training. Identical seeds give identical results.
    """
    effective = split_spec.seed if seed is None else seed
    train, test = stratified_split(
        corpus, SplitSpec(train_fraction=split_spec.train_fraction, seed=effective)
    )
    return run_on_split(train, test, spec, effective)


# ---------------------------------------------------------------------------
# Grid sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    classifier: str
    train_fraction: float
    topics: int
    seed: int
    metrics: Metrics | None
    macro: Metrics | None
    dim_reduction_pct: float | None
    seconds: float
    error: str | None = None

    @property
    def key(self) -> tuple:
        return (self.classifier, self.train_fraction, self.topics, self.seed)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    def to_csv(self) -> str:
        lines = [
            "classifier,train_fraction,topics,seed,precision,recall,fscore,"
            "dim_reduction_pct,seconds"
        ]
        for row in self.rows:
            if row.metrics is None:
                fields = ["", "", "", ""]
            else:
                fields = [
                    f"{row.metrics.precision:.6f}",
                    f"{row.metrics.recall:.6f}",
                    f"{row.metrics.fscore:.6f}",
                    f"{row.dim_reduction_pct:.4f}",
                ]
            lines.append(
                ",".join(
                    [
                        row.classifier,
                        repr(row.train_fraction),
                        str(row.topics),
                        str(row.seed),
                        *fields,
                        f"{row.seconds:.3f}",
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    def to_jsonl(self) -> str:
        lines = []
        for row in self.rows:
            record = {
                "classifier": row.classifier,
                "train_fraction": row.train_fraction,
                "topics": row.topics,
                "seed": row.seed,
                "precision": None if row.metrics is None else row.metrics.precision,
                "recall": None if row.metrics is None else row.metrics.recall,
                "fscore": None if row.metrics is None else row.metrics.fscore,
                "macro_precision": None if row.macro is None else row.macro.precision,
                "macro_recall": None if row.macro is None else row.macro.recall,
                "macro_fscore": None if row.macro is None else row.macro.fscore,
                "dim_reduction_pct": row.dim_reduction_pct,
                "seconds": round(row.seconds, 3),
                "error": row.error,
            }
            lines.append(canonical_json(record))
        return "\n".join(lines) + "\n"


def _evaluate_cell(args: tuple) -> SweepRow:
    corpus, classifier, fraction, topics, seed, base_spec, timer = args
    clock = time.perf_counter if timer is None else timer
    start = clock()
    try:
        spec = replace(
            base_spec,
            classifier=classifier,
            lda=replace(base_spec.lda, topics=topics),
        )
        result = run_experiment(
            corpus, SplitSpec(train_fraction=fraction, seed=seed), spec
        )
        dim = dimension_reduction(result.vocab_size, topics)
        return SweepRow(
            classifier=classifier,
            train_fraction=fraction,
            topics=topics,
            seed=seed,
            metrics=result.metrics,
            macro=result.macro,
            dim_reduction_pct=dim,
            seconds=clock() - start,
        )
    except Exception as exc:  # cell failures recorded in-row, sweep continues
        return SweepRow(
            classifier=classifier,
            train_fraction=fraction,
            topics=topics,
            seed=seed,
            metrics=None,
            macro=None,
            dim_reduction_pct=None,
            seconds=clock() - start,
            error=f"{type(exc).__name__}: {exc}",
        )


def sweep(
    corpus: Corpus,
    fractions: Sequence[float] = PAPER_FRACTIONS,
    topic_counts: Sequence[int] = PAPER_TOPIC_COUNTS,
    classifiers: Sequence[str] = ("atc", "ctc", "stc", "tvc-svm", "tvc-tree"),
    seeds: Sequence[int] = (0,),
    base_spec: PipelineSpec | None = None,
    timer: Callable[[], float] | None = None,
    jobs: int = 1,
) -> SweepResult:
    """Evaluate every (classifier, fraction, topic count, seed) grid cell.

    Rows come back sorted by grid key regardless of execution order. A custom
    ``timer`` (e.g. ``lambda: 0.0``) makes the emitted files byte-reproducible;
    it requires ``jobs=1``.
    """
    if not fractions or not topic_counts or not classifiers or not seeds:
        raise ValueError("fractions, topic_counts, classifiers and seeds must be non-empty")
    if base_spec is None:
        base_spec = PipelineSpec(classifier=classifiers[0], lda=LdaConfig(topics=2))
    if base_spec.lda is None:
        base_spec = replace(base_spec, lda=LdaConfig(topics=2))
    if timer is not None and jobs != 1:
        raise ValueError("a custom timer requires jobs=1")

    cells = [
        (corpus, classifier, float(fraction), int(topics), int(seed), base_spec, timer)
        for classifier in classifiers
        for fraction in fractions
        for topics in topic_counts
        for seed in seeds
    ]
    if jobs == 1:
        rows = [_evaluate_cell(cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_evaluate_cell, cells))
    return SweepResult(rows=tuple(sorted(rows, key=lambda r: r.key)))


def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    Path(path).write_text(result.to_csv(), encoding="utf-8")


def write_sweep_jsonl(result: SweepResult, path: str | Path) -> None:
    Path(path).write_text(result.to_jsonl(), encoding="utf-8")
