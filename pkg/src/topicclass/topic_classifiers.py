"""The four topic-space classifiers plus the raw bag-of-words wrapper.

* TVC: a conventional learner (SVM or decision tree) trained on topic vectors.
* CTC: thresholds the topic with the highest association-rule confidence for
  the positive class.
* STC: assigns the class whose average topic distribution is most
  cosine-similar to the document.
* ATC: thresholds the topic whose between-class centroid difference is
  largest.

Since topics are continuous, association-rule support is fractional by
default: a topic's support is its total probability mass over the corpus, and
joint support with a class is the mass within that class. The classical
binarized reading (topic "present" when its share exceeds 1/K) is available
via ``support_mode="binarized"``.

ATC and CTC share one threshold rule: the (1 - positive class ratio) quantile
of the selected topic's training values (mirrored for a negatively associated
topic), or an optional cross-validated grid search over 21 candidate
thresholds scored by F on a held-out fifth of the training set.

Classifiers persist as JSON carrying the content hash of the topic model (or
vocabulary, for raw classifiers) they were trained against, so a model can
never be applied to vectors from the wrong topic space.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .base_learners import (
    DecisionTreeModel,
    FeatureMatrix,
    LinearSvmModel,
    predict_svm,
    predict_tree,
    svm_from_dict,
    svm_to_dict,
    train_svm,
    train_tree,
    tree_from_dict,
    tree_to_dict,
)
from .corpus import LABELS, NEGATIVE, POSITIVE
from .evaluation import confusion, metrics
from .jsonio import canonical_json

CLASSIFIER_FORMAT = "classifier"
FORMAT_VERSION = 1

TOPIC_CLASSIFIERS = ("atc", "ctc", "stc", "tvc-svm", "tvc-tree")
RAW_CLASSIFIERS = ("raw-svm", "raw-tree")
ALL_CLASSIFIERS = TOPIC_CLASSIFIERS + RAW_CLASSIFIERS

THRESHOLD_MODES = ("prior-quantile", "cv")
SUPPORT_MODES = ("fractional", "binarized")

POSITIVE_HIGH = "positive-high"
POSITIVE_LOW = "positive-low"

_CV_GRID = np.linspace(0.0, 1.0, 21)
_CV_HOLDOUT = 0.2


class ClassifierError(ValueError):
    """Invalid classifier inputs or configuration."""


@dataclass(frozen=True)
class ClassCentroid:
    """Average topic distribution of one class."""

    label: str
    mean_theta: np.ndarray

    def __post_init__(self) -> None:
        theta = np.asarray(self.mean_theta, dtype=np.float64)
        theta.setflags(write=False)
        object.__setattr__(self, "mean_theta", theta)


@dataclass(frozen=True)
class AtcModel:
    topic: int
    threshold: float
    orientation: str

    def __post_init__(self) -> None:
        if self.orientation not in (POSITIVE_HIGH, POSITIVE_LOW):
            raise ClassifierError(f"unknown orientation {self.orientation!r}")


@dataclass(frozen=True)
class CtcModel:
    topic: int
    threshold: float


@dataclass(frozen=True)
class StcModel:
    """One centroid per class, positive first."""

    centroids: tuple[ClassCentroid, ClassCentroid]

    def __post_init__(self) -> None:
        labels = tuple(c.label for c in self.centroids)
        if labels != (POSITIVE, NEGATIVE):
            raise ClassifierError(f"expected (positive, negative) centroids, got {labels}")


@dataclass(frozen=True)
class TvcModel:
    """Base learner applied to topic vectors."""

    learner: str
    base: LinearSvmModel | DecisionTreeModel

    def __post_init__(self) -> None:
        if self.learner not in ("svm", "tree"):
            raise ClassifierError(f"unknown learner {self.learner!r}")


@dataclass(frozen=True)
class RawTextModel:
    """Base learner applied to bag-of-words rows with a fixed weighting."""

    learner: str
    base: LinearSvmModel | DecisionTreeModel
    weighting: str


def _as_theta_matrix(topic_vectors: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    thetas = np.asarray(topic_vectors, dtype=np.float64)
    if thetas.ndim != 2 or thetas.shape[0] == 0:
        raise ClassifierError("topic vectors must form a non-empty 2-D array")
    return thetas


def _check_labels(labels: Sequence[str], n: int) -> np.ndarray:
    if len(labels) != n:
        raise ClassifierError(f"got {n} topic vectors but {len(labels)} labels")
    for label in labels:
        if label not in LABELS:
            raise ClassifierError(f"labels must be in {LABELS}, got {label!r}")
    return np.asarray(labels, dtype=object)


def _require_both_classes(labels: np.ndarray) -> None:
    for label in LABELS:
        if not np.any(labels == label):
            raise ClassifierError(f"class {label!r} has no training vectors")


def cosine_similarity(x: Sequence[float], y: Sequence[float]) -> float:
    """``x.y / (|x||y|)``; lies in [0, 1] for non-negative inputs."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ClassifierError(f"vector shapes differ: {x.shape} vs {y.shape}")
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        raise ClassifierError("cosine similarity undefined for a zero-norm vector")
    return min(1.0, float(x @ y) / (nx * ny))


def class_centroids(
    topic_vectors: Sequence[Sequence[float]] | np.ndarray, labels: Sequence[str]
) -> tuple[ClassCentroid, ClassCentroid]:
    """Component-wise mean topic distribution per class, positive first."""
    thetas = _as_theta_matrix(topic_vectors)
    label_arr = _check_labels(labels, thetas.shape[0])
    _require_both_classes(label_arr)
    out = []
    for label in (POSITIVE, NEGATIVE):
        members = thetas[label_arr == label]
        out.append(ClassCentroid(label=label, mean_theta=members.mean(axis=0)))
    return out[0], out[1]


def topic_confidence(
    topic_vectors: Sequence[Sequence[float]] | np.ndarray,
    labels: Sequence[str],
    topic: int,
    klass: str,
    support_mode: str = "fractional",
) -> float:
    """Association-rule confidence that ``topic`` implies ``klass``.

    Fractional mode divides the topic's probability mass within the class by
    its total mass; binarized mode counts documents whose topic share exceeds
    1/K. Zero total support is an error (corrupt topic vectors).
    """
    thetas = _as_theta_matrix(topic_vectors)
    label_arr = _check_labels(labels, thetas.shape[0])
    if klass not in LABELS:
        raise ClassifierError(f"unknown class {klass!r}")
    if not 0 <= topic < thetas.shape[1]:
        raise ClassifierError(f"topic {topic} out of range")
    if support_mode not in SUPPORT_MODES:
        raise ClassifierError(f"unknown support mode {support_mode!r}")

    values = thetas[:, topic]
    in_class = label_arr == klass
    if support_mode == "fractional":
        denominator = float(values.sum())
        numerator = float(values[in_class].sum())
    else:
        present = values > 1.0 / thetas.shape[1]
        denominator = float(present.sum())
        numerator = float((present & in_class).sum())
    if denominator == 0.0:
        raise ClassifierError(f"topic {topic} has zero total support")
    return numerator / denominator


def _stratified_holdout(
    labels: np.ndarray, fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Index split (fit, validation) keeping the class ratio on both sides."""
    rng = np.random.default_rng(seed)
    fit_idx: list[int] = []
    val_idx: list[int] = []
    for label in LABELS:
        members = np.nonzero(labels == label)[0]
        order = rng.permutation(members.shape[0])
        n_val = max(1, int(np.floor(fraction * members.shape[0] + 0.5)))
        n_val = min(n_val, members.shape[0] - 1) if members.shape[0] > 1 else n_val
        val_idx.extend(members[order[:n_val]])
        fit_idx.extend(members[order[n_val:]])
    return np.sort(np.asarray(fit_idx)), np.sort(np.asarray(val_idx))


def _threshold_predictions(values: np.ndarray, threshold: float, orientation: str) -> list[str]:
    if orientation == POSITIVE_HIGH:
        positive = values > threshold
    else:
        positive = values < threshold
    return [POSITIVE if flag else NEGATIVE for flag in positive]


def _cv_threshold(
    values: np.ndarray, labels: np.ndarray, orientation: str, seed: int
) -> float:
    """Grid-search the threshold on a held-out fifth of the training set."""
    _, val_idx = _stratified_holdout(labels, _CV_HOLDOUT, seed)
    val_values = values[val_idx]
    val_labels = list(labels[val_idx])
    best_threshold = float(_CV_GRID[0])
    best_score = -1.0
    for candidate in _CV_GRID:
        predicted = _threshold_predictions(val_values, float(candidate), orientation)
        score = metrics(confusion(predicted, val_labels)).fscore
        if score > best_score:
            best_score = score
            best_threshold = float(candidate)
    return best_threshold


def _pick_threshold(
    values: np.ndarray,
    labels: np.ndarray,
    orientation: str,
    positive_ratio: float,
    threshold_mode: str,
    seed: int,
) -> float:
    if threshold_mode not in THRESHOLD_MODES:
        raise ClassifierError(f"unknown threshold mode {threshold_mode!r}")
    if threshold_mode == "cv":
        return _cv_threshold(values, labels, orientation, seed)
    if orientation == POSITIVE_HIGH:
        return float(np.quantile(values, 1.0 - positive_ratio))
    return float(np.quantile(values, positive_ratio))


def train_ctc(
    topic_vectors: Sequence[Sequence[float]] | np.ndarray,
    labels: Sequence[str],
    threshold_mode: str = "prior-quantile",
    support_mode: str = "fractional",
    seed: int = 0,
) -> CtcModel:
    """Select the topic with maximal confidence for the positive class (ties
    to the lowest index) and threshold it."""
    thetas = _as_theta_matrix(topic_vectors)
    label_arr = _check_labels(labels, thetas.shape[0])
    _require_both_classes(label_arr)

    best_topic = -1
    best_conf = -1.0
    last_error: ClassifierError | None = None
    for topic in range(thetas.shape[1]):
        try:
            conf = topic_confidence(thetas, labels, topic, POSITIVE, support_mode)
        except ClassifierError as exc:
            last_error = exc
            continue
        if conf > best_conf:
            best_conf = conf
            best_topic = topic
    if best_topic < 0:
        raise last_error if last_error is not None else ClassifierError(
            "no topic with positive support"
        )

    positive_ratio = float(np.mean(label_arr == POSITIVE))
    threshold = _pick_threshold(
        thetas[:, best_topic], label_arr, POSITIVE_HIGH, positive_ratio,
        threshold_mode, seed,
    )
    return CtcModel(topic=best_topic, threshold=threshold)


def predict_ctc(model: CtcModel, theta: Sequence[float]) -> str:
    """Positive exactly when the selected topic's value exceeds the threshold."""
    theta = np.asarray(theta, dtype=np.float64)
    if not 0 <= model.topic < theta.shape[0]:
        raise ClassifierError(f"topic {model.topic} out of range for this vector")
    return POSITIVE if float(theta[model.topic]) > model.threshold else NEGATIVE


def train_stc(
    topic_vectors: Sequence[Sequence[float]] | np.ndarray, labels: Sequence[str]
) -> StcModel:
    """Store the per-class average topic distributions."""
    return StcModel(centroids=class_centroids(topic_vectors, labels))


def predict_stc(model: StcModel, theta: Sequence[float]) -> str:
    """The class of the most cosine-similar centroid; an exact tie predicts
    negative (the majority class)."""
    pos, neg = model.centroids
    sim_pos = cosine_similarity(theta, pos.mean_theta)
    sim_neg = cosine_similarity(theta, neg.mean_theta)
    return POSITIVE if sim_pos > sim_neg else NEGATIVE


def train_atc(
    topic_vectors: Sequence[Sequence[float]] | np.ndarray,
    labels: Sequence[str],
    positive_ratio: float,
    threshold_mode: str = "prior-quantile",
    seed: int = 0,
) -> AtcModel:
    """Select the topic with the largest between-centroid difference (ties to
    the lowest index), orient it by which class sits higher, and threshold at
    the class-ratio quantile of its training values."""
    if not 0.0 < positive_ratio < 1.0:
        raise ClassifierError(f"positive_ratio must be in (0, 1), got {positive_ratio}")
    thetas = _as_theta_matrix(topic_vectors)
    label_arr = _check_labels(labels, thetas.shape[0])
    pos, neg = class_centroids(thetas, labels)

    differences = np.abs(pos.mean_theta - neg.mean_theta)
    topic = int(np.argmax(differences))
    if differences[topic] == 0.0:
        warnings.warn(
            "class centroids are identical; the discriminative-topic model is degenerate",
            stacklevel=2,
        )
    orientation = (
        POSITIVE_HIGH if pos.mean_theta[topic] > neg.mean_theta[topic] else POSITIVE_LOW
    )
    threshold = _pick_threshold(
        thetas[:, topic], label_arr, orientation, positive_ratio, threshold_mode, seed
    )
    return AtcModel(topic=topic, threshold=threshold, orientation=orientation)


def predict_atc(model: AtcModel, theta: Sequence[float]) -> str:
    """Threshold the selected topic, respecting the orientation; values equal
    to the threshold predict negative."""
    theta = np.asarray(theta, dtype=np.float64)
    if not 0 <= model.topic < theta.shape[0]:
        raise ClassifierError(f"topic {model.topic} out of range for this vector")
    value = float(theta[model.topic])
    if model.orientation == POSITIVE_HIGH:
        return POSITIVE if value > model.threshold else NEGATIVE
    return POSITIVE if value < model.threshold else NEGATIVE


def _labels_to_signs(labels: np.ndarray) -> np.ndarray:
    return np.where(labels == POSITIVE, 1, -1).astype(np.int64)


def train_tvc(
    topic_vectors: Sequence[Sequence[float]] | np.ndarray,
    labels: Sequence[str],
    learner: str = "svm",
    seed: int = 0,
    svm_c: float = 1.0,
    svm_tolerance: float = 1e-3,
    svm_max_passes: int = 10,
    tree_min_leaf: int = 2,
    tree_max_depth: int = 25,
) -> TvcModel:
    """Train a conventional learner on topic vectors as features."""
    thetas = _as_theta_matrix(topic_vectors)
    label_arr = _check_labels(labels, thetas.shape[0])
    _require_both_classes(label_arr)
    data = FeatureMatrix(features=thetas, labels=_labels_to_signs(label_arr))
    if learner == "svm":
        base = train_svm(
            data, c=svm_c, tolerance=svm_tolerance, max_passes=svm_max_passes, seed=seed
        )
    elif learner == "tree":
        base = train_tree(data, min_leaf=tree_min_leaf, max_depth=tree_max_depth)
    else:
        raise ClassifierError(f"unknown learner {learner!r}")
    return TvcModel(learner=learner, base=base)


def _predict_base(model: TvcModel | RawTextModel, features: Sequence[float]) -> str:
    if model.learner == "svm":
        sign = predict_svm(model.base, features)
    else:
        sign = predict_tree(model.base, features)
    return POSITIVE if sign > 0 else NEGATIVE


def predict_tvc(model: TvcModel, theta: Sequence[float]) -> str:
    return _predict_base(model, theta)


def train_raw(
    features: np.ndarray,
    labels: Sequence[str],
    weighting: str,
    learner: str = "svm",
    seed: int = 0,
    svm_c: float = 1.0,
    svm_tolerance: float = 1e-3,
    svm_max_passes: int = 10,
    tree_min_leaf: int = 2,
    tree_max_depth: int = 25,
) -> RawTextModel:
    """Train a conventional learner directly on bag-of-words rows."""
    features = np.asarray(features, dtype=np.float64)
    label_arr = _check_labels(labels, features.shape[0])
    _require_both_classes(label_arr)
    data = FeatureMatrix(features=features, labels=_labels_to_signs(label_arr))
    if learner == "svm":
        base = train_svm(
            data, c=svm_c, tolerance=svm_tolerance, max_passes=svm_max_passes, seed=seed
        )
    elif learner == "tree":
        base = train_tree(data, min_leaf=tree_min_leaf, max_depth=tree_max_depth)
    else:
        raise ClassifierError(f"unknown learner {learner!r}")
    return RawTextModel(learner=learner, base=base, weighting=weighting)


def predict_raw(model: RawTextModel, features: Sequence[float]) -> str:
    return _predict_base(model, features)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _base_to_dict(base: LinearSvmModel | DecisionTreeModel) -> dict:
    return svm_to_dict(base) if isinstance(base, LinearSvmModel) else tree_to_dict(base)


def _base_from_dict(data: dict) -> LinearSvmModel | DecisionTreeModel:
    from .base_learners import SVM_FORMAT

    if data.get("format") == SVM_FORMAT:
        return svm_from_dict(data)
    return tree_from_dict(data)


def classifier_to_dict(
    model: AtcModel | CtcModel | StcModel | TvcModel | RawTextModel,
    lda_model_hash: str | None = None,
    vocab_hash: str | None = None,
) -> dict:
    if isinstance(model, AtcModel):
        kind, payload = "atc", {
            "topic": model.topic,
            "threshold": model.threshold,
            "orientation": model.orientation,
        }
    elif isinstance(model, CtcModel):
        kind, payload = "ctc", {"topic": model.topic, "threshold": model.threshold}
    elif isinstance(model, StcModel):
        kind, payload = "stc", {
            "centroids": [
                {"label": c.label, "mean_theta": [float(v) for v in c.mean_theta]}
                for c in model.centroids
            ]
        }
    elif isinstance(model, TvcModel):
        kind, payload = f"tvc-{model.learner}", {"base": _base_to_dict(model.base)}
    elif isinstance(model, RawTextModel):
        kind, payload = f"raw-{model.learner}", {
            "base": _base_to_dict(model.base),
            "weighting": model.weighting,
        }
    else:
        raise ClassifierError(f"cannot serialize {type(model).__name__}")
    return {
        "format": CLASSIFIER_FORMAT,
        "version": FORMAT_VERSION,
        "kind": kind,
        "lda_model_hash": lda_model_hash,
        "vocab_hash": vocab_hash,
        "payload": payload,
    }


def classifier_from_dict(
    data: dict,
) -> tuple[AtcModel | CtcModel | StcModel | TvcModel | RawTextModel, dict]:
    """Rebuild a classifier; returns (model, provenance) where provenance has
    the ``kind``, ``lda_model_hash`` and ``vocab_hash`` fields."""
    if data.get("format") != CLASSIFIER_FORMAT or "version" not in data:
        raise ClassifierError("not a classifier document")
    if int(data["version"]) != FORMAT_VERSION:
        raise ClassifierError(f"unsupported classifier version {data['version']}")
    kind = data["kind"]
    payload = data["payload"]
    model: AtcModel | CtcModel | StcModel | TvcModel | RawTextModel
    if kind == "atc":
        model = AtcModel(
            topic=int(payload["topic"]),
            threshold=float(payload["threshold"]),
            orientation=str(payload["orientation"]),
        )
    elif kind == "ctc":
        model = CtcModel(topic=int(payload["topic"]), threshold=float(payload["threshold"]))
    elif kind == "stc":
        model = StcModel(
            centroids=tuple(
                ClassCentroid(
                    label=str(c["label"]),
                    mean_theta=np.asarray(c["mean_theta"], dtype=np.float64),
                )
                for c in payload["centroids"]
            )
        )
    elif kind in ("tvc-svm", "tvc-tree"):
        model = TvcModel(learner=kind.split("-", 1)[1], base=_base_from_dict(payload["base"]))
    elif kind in ("raw-svm", "raw-tree"):
        model = RawTextModel(
            learner=kind.split("-", 1)[1],
            base=_base_from_dict(payload["base"]),
            weighting=str(payload["weighting"]),
        )
    else:
        raise ClassifierError(f"unknown classifier kind {kind!r}")
    provenance = {
        "kind": kind,
        "lda_model_hash": data.get("lda_model_hash"),
        "vocab_hash": data.get("vocab_hash"),
    }
    return model, provenance


def save_classifier(
    model: AtcModel | CtcModel | StcModel | TvcModel | RawTextModel,
    path: str | Path,
    lda_model_hash: str | None = None,
    vocab_hash: str | None = None,
) -> None:
    data = classifier_to_dict(model, lda_model_hash=lda_model_hash, vocab_hash=vocab_hash)
    Path(path).write_text(canonical_json(data) + "\n", encoding="utf-8")


def load_classifier(
    path: str | Path,
) -> tuple[AtcModel | CtcModel | StcModel | TvcModel | RawTextModel, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return classifier_from_dict(json.load(fh))
