"""From-scratch baseline learners: a linear soft-margin SVM trained by
sequential minimal optimization and a binary decision tree split on
information gain.

Both learners work on dense feature matrices with labels in {+1, -1} and are
used for raw bag-of-words classification as well as classification of topic
vectors. Trained models are immutable, deterministic for a given seed, and
persist as JSON (dense weight vector + bias for the SVM, nested node objects
for the tree).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .jsonio import canonical_json

SVM_FORMAT = "linear-svm"
TREE_FORMAT = "decision-tree"
FORMAT_VERSION = 1

# Minimum change in a dual variable for an SMO step to count as progress.
_SMO_MIN_STEP = 1e-5


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense real-valued features with one +1/-1 label per row."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if labels.shape != (feats.shape[0],):
            raise ValueError("labels must align with feature rows")
        if not np.all(np.isin(labels, (-1, 1))):
            raise ValueError("labels must be +1 or -1")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])


@dataclass(frozen=True)
class LinearSvmModel:
    """Separating hyperplane ``sign(w.x + b)`` with SMO training metadata.

    ``alphas`` and ``max_dual_violation`` are training diagnostics (the dual
    variables and the largest observed \\|sum alpha_i y_i\\|); they are not
    persisted.
    """

    weights: np.ndarray
    bias: float
    c: float
    tolerance: float
    alphas: np.ndarray | None = None
    max_dual_violation: float | None = None

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 1 or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be a finite 1-D vector")
        if self.c <= 0:
            raise ValueError(f"C must be > 0, got {self.c}")
        weights = weights.copy()
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)


def train_svm(
    data: FeatureMatrix,
    c: float = 1.0,
    tolerance: float = 1e-3,
    max_passes: int = 10,
    seed: int = 0,
) -> LinearSvmModel:
    """Train a linear soft-margin SVM with simplified SMO.

    Scans examples for KKT violations (within ``tolerance``), pairing each
    violator with a random partner and solving the two-variable subproblem
    analytically. Stops after ``max_passes`` consecutive full scans without
    an update. The pairwise updates keep ``0 <= alpha_i <= C`` and
    ``sum alpha_i y_i = 0`` feasible throughout.
    """
    x = data.features
    y = data.labels.astype(np.float64)
    n = x.shape[0]
    if len(np.unique(data.labels)) < 2:
        raise ValueError("SVM training requires at least one example of each class")

    rng = np.random.default_rng(seed)
    alphas = np.zeros(n, dtype=np.float64)
    w = np.zeros(x.shape[1], dtype=np.float64)
    b = 0.0
    gram_diag = np.einsum("ij,ij->i", x, x)
    max_violation = 0.0

    passes = 0
    while passes < max_passes:
        changed = 0
        for i in range(n):
            e_i = float(x[i] @ w) + b - y[i]
            if not (
                (y[i] * e_i < -tolerance and alphas[i] < c)
                or (y[i] * e_i > tolerance and alphas[i] > 0)
            ):
                continue
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            e_j = float(x[j] @ w) + b - y[j]

            alpha_i_old = alphas[i]
            alpha_j_old = alphas[j]
            if y[i] != y[j]:
                low = max(0.0, alpha_j_old - alpha_i_old)
                high = min(c, c + alpha_j_old - alpha_i_old)
            else:
                low = max(0.0, alpha_i_old + alpha_j_old - c)
                high = min(c, alpha_i_old + alpha_j_old)
            if low == high:
                continue

            k_ij = float(x[i] @ x[j])
            eta = 2.0 * k_ij - gram_diag[i] - gram_diag[j]
            if eta >= 0:
                continue

            alpha_j = alpha_j_old - y[j] * (e_i - e_j) / eta
            alpha_j = min(high, max(low, alpha_j))
            if abs(alpha_j - alpha_j_old) < _SMO_MIN_STEP:
                continue
            alpha_i = alpha_i_old + y[i] * y[j] * (alpha_j_old - alpha_j)

            b1 = (
                b
                - e_i
                - y[i] * (alpha_i - alpha_i_old) * gram_diag[i]
                - y[j] * (alpha_j - alpha_j_old) * k_ij
            )
            b2 = (
                b
                - e_j
                - y[i] * (alpha_i - alpha_i_old) * k_ij
                - y[j] * (alpha_j - alpha_j_old) * gram_diag[j]
            )
            if 0.0 < alpha_i < c:
                b = b1
            elif 0.0 < alpha_j < c:
                b = b2
            else:
                b = (b1 + b2) / 2.0

            w = w + y[i] * (alpha_i - alpha_i_old) * x[i] + y[j] * (alpha_j - alpha_j_old) * x[j]
            alphas[i] = alpha_i
            alphas[j] = alpha_j
            changed += 1

        max_violation = max(max_violation, abs(float(alphas @ y)))
        passes = passes + 1 if changed == 0 else 0

    return LinearSvmModel(
        weights=w,
        bias=float(b),
        c=c,
        tolerance=tolerance,
        alphas=alphas,
        max_dual_violation=max_violation,
    )


def svm_decision_value(model: LinearSvmModel, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise ValueError(
            f"feature vector has {x.shape[0] if x.ndim == 1 else '?'} dimensions, "
            f"model expects {model.weights.shape[0]}"
        )
    return float(model.weights @ x) + model.bias


def predict_svm(model: LinearSvmModel, x: Sequence[float]) -> int:
    """+1 or -1 by the sign of the decision value; exactly 0 predicts -1."""
    return 1 if svm_decision_value(model, x) > 0 else -1


# ---------------------------------------------------------------------------
# Decision tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature, threshold, children) or leaf (label)."""

    label: int | None = None
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.label is not None


@dataclass(frozen=True)
class DecisionTreeModel:
    root: TreeNode
    n_features: int
    min_leaf: int
    max_depth: int


def _entropy(n_pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Binary entropy of positive-count ``n_pos`` out of ``n`` (vectorized)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        p = n_pos / n
        q = 1.0 - p
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(q > 0, q * np.log2(q), 0.0))
    return h


def _best_split(x: np.ndarray, y: np.ndarray) -> tuple[int, float, float] | None:
    """Highest-information-gain (feature, threshold, gain) over midpoint
    candidates, or None when no split has positive gain. Ties prefer the
    lowest feature index, then the lowest threshold."""
    n = y.shape[0]
    n_pos_total = int(np.sum(y == 1))
    parent = float(_entropy(np.array([n_pos_total]), np.array([n]))[0])

    best: tuple[int, float, float] | None = None
    for feature in range(x.shape[1]):
        col = x[:, feature]
        order = np.argsort(col, kind="stable")
        sorted_vals = col[order]
        sorted_pos = (y[order] == 1).astype(np.float64)

        boundaries = np.nonzero(sorted_vals[:-1] != sorted_vals[1:])[0]
        if boundaries.size == 0:
            continue
        left_n = (boundaries + 1).astype(np.float64)
        right_n = n - left_n
        left_pos = np.cumsum(sorted_pos)[boundaries]
        right_pos = n_pos_total - left_pos

        child = (left_n / n) * _entropy(left_pos, left_n) + (right_n / n) * _entropy(
            right_pos, right_n
        )
        gains = parent - child
        pos = int(np.argmax(gains))
        gain = float(gains[pos])
        if gain <= 0:
            continue
        threshold = float(
            (sorted_vals[boundaries[pos]] + sorted_vals[boundaries[pos] + 1]) / 2.0
        )
        if best is None or gain > best[2]:
            best = (feature, threshold, gain)
    return best


def _majority(y: np.ndarray) -> int:
    """Majority label, ties to -1 (the majority class of the task)."""
    n_pos = int(np.sum(y == 1))
    return 1 if n_pos > y.shape[0] - n_pos else -1


def _grow(x: np.ndarray, y: np.ndarray, depth: int, min_leaf: int, max_depth: int) -> TreeNode:
    if np.all(y == y[0]):
        return TreeNode(label=int(y[0]))
    if y.shape[0] < min_leaf or depth >= max_depth:
        return TreeNode(label=_majority(y))
    split = _best_split(x, y)
    if split is None:
        return TreeNode(label=_majority(y))
    feature, threshold, _ = split
    mask = x[:, feature] <= threshold
    return TreeNode(
        feature=feature,
        threshold=threshold,
        left=_grow(x[mask], y[mask], depth + 1, min_leaf, max_depth),
        right=_grow(x[~mask], y[~mask], depth + 1, min_leaf, max_depth),
    )


def train_tree(data: FeatureMatrix, min_leaf: int = 2, max_depth: int = 25) -> DecisionTreeModel:
    """Grow a binary decision tree by recursive information-gain splits.

    Candidate thresholds are midpoints of consecutive distinct feature values,
    so both children are always non-empty. A node stops splitting at purity,
    when it holds fewer than ``min_leaf`` samples, or at ``max_depth``.
    Leaf labels are the majority class, ties predicting -1.
    """
    if data.features.shape[0] == 0:
        raise ValueError("cannot train a tree on empty data")
    if min_leaf < 2:
        raise ValueError(f"min_leaf must be >= 2, got {min_leaf}")
    if max_depth < 1:
        raise ValueError(f"max_depth must be >= 1, got {max_depth}")
    root = _grow(data.features, data.labels, 0, min_leaf, max_depth)
    return DecisionTreeModel(
        root=root,
        n_features=data.n_features,
        min_leaf=min_leaf,
        max_depth=max_depth,
    )


def predict_tree(model: DecisionTreeModel, x: Sequence[float]) -> int:
    """Route the vector down the tree: value <= threshold goes left."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(
            f"feature vector has {x.shape} shape, model expects ({model.n_features},)"
        )
    node = model.root
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return int(node.label)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def svm_to_dict(model: LinearSvmModel) -> dict:
    return {
        "format": SVM_FORMAT,
        "version": FORMAT_VERSION,
        "weights": [float(w) for w in model.weights],
        "bias": model.bias,
        "c": model.c,
        "tolerance": model.tolerance,
    }


def svm_from_dict(data: dict) -> LinearSvmModel:
    if data.get("format") != SVM_FORMAT or "version" not in data:
        raise ValueError("not a linear SVM model document")
    return LinearSvmModel(
        weights=np.asarray(data["weights"], dtype=np.float64),
        bias=float(data["bias"]),
        c=float(data["c"]),
        tolerance=float(data["tolerance"]),
    )


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"label": node.label}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(data: dict) -> TreeNode:
    if "label" in data:
        return TreeNode(label=int(data["label"]))
    return TreeNode(
        feature=int(data["feature"]),
        threshold=float(data["threshold"]),
        left=_node_from_dict(data["left"]),
        right=_node_from_dict(data["right"]),
    )


def tree_to_dict(model: DecisionTreeModel) -> dict:
    return {
        "format": TREE_FORMAT,
        "version": FORMAT_VERSION,
        "n_features": model.n_features,
        "min_leaf": model.min_leaf,
        "max_depth": model.max_depth,
        "root": _node_to_dict(model.root),
    }


def tree_from_dict(data: dict) -> DecisionTreeModel:
    if data.get("format") != TREE_FORMAT or "version" not in data:
        raise ValueError("not a decision tree model document")
    return DecisionTreeModel(
        root=_node_from_dict(data["root"]),
        n_features=int(data["n_features"]),
        min_leaf=int(data["min_leaf"]),
        max_depth=int(data["max_depth"]),
    )


def save_base_model(model: LinearSvmModel | DecisionTreeModel, path: str | Path) -> None:
    data = svm_to_dict(model) if isinstance(model, LinearSvmModel) else tree_to_dict(model)
    Path(path).write_text(canonical_json(data) + "\n", encoding="utf-8")


def load_base_model(path: str | Path) -> LinearSvmModel | DecisionTreeModel:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("format") == SVM_FORMAT:
        return svm_from_dict(data)
    if data.get("format") == TREE_FORMAT:
        return tree_from_dict(data)
    raise ValueError(f"{path}: unknown model format {data.get('format')!r}")
