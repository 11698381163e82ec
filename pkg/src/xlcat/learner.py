"""One-vs-rest linear SVM over binary feature vectors, trained by
Pegasos-style stochastic subgradient descent, plus evaluation metrics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from ._util import stable_rng
from .errors import DataError, XlcatError
from .features import BinaryFeatureVector

FORMAT_MAGIC = "xlcat-model"
FORMAT_VERSION = 1

DEFAULT_LAMBDA = 1e-4
DEFAULT_EPOCHS = 20


class TrainingError(XlcatError):
    pass


@dataclass
class LinearModel:
    categories: List[str]
    weights: np.ndarray  # shape (n_categories, n_features)
    bias: np.ndarray  # shape (n_categories,)
    lambda_: float
    epochs: int
    seed: int
    feature_space_ref: Optional[dict] = None
    # Per-category regularized hinge objective at each epoch boundary;
    # informational only, not persisted.
    objective_history: Optional[Dict[str, List[float]]] = None

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def save(self, path: str | Path) -> None:
        payload = {
            "format": FORMAT_MAGIC,
            "version": FORMAT_VERSION,
            "categories": self.categories,
            "lambda": self.lambda_,
            "epochs": self.epochs,
            "seed": self.seed,
            "feature_space_ref": self.feature_space_ref,
            "weights": [[float(w) for w in row] for row in self.weights],
            "bias": [float(b) for b in self.bias],
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != FORMAT_MAGIC:
            raise DataError(f"{path}: not a model file")
        if payload.get("version") != FORMAT_VERSION:
            raise DataError(f"{path}: unsupported version {payload.get('version')}")
        return cls(
            categories=list(payload["categories"]),
            weights=np.array(payload["weights"], dtype=np.float64),
            bias=np.array(payload["bias"], dtype=np.float64),
            lambda_=payload["lambda"],
            epochs=payload["epochs"],
            seed=payload["seed"],
            feature_space_ref=payload.get("feature_space_ref"),
        )


@dataclass
class EvalReport:
    accuracy: float
    macro_f1: float
    per_category: Dict[str, Dict[str, float]]
    confusion: List[List[int]]  # rows: true category, cols: predicted
    categories: List[str]
    n_test: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_category": self.per_category,
            "confusion_matrix": self.confusion,
            "categories": self.categories,
            "n_test": self.n_test,
        }


def _check_vectors(vectors: Sequence[BinaryFeatureVector], n_features: int) -> None:
    for vec in vectors:
        if vec and (max(vec) >= n_features or min(vec) < 0):
            raise TrainingError(
                f"vector coordinate out of range for dimension {n_features}"
            )


def train(
    vectors: Sequence[BinaryFeatureVector],
    labels: Sequence[str],
    categories: Sequence[str],
    n_features: int,
    lambda_: float = DEFAULT_LAMBDA,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    feature_space_ref: Optional[dict] = None,
) -> LinearModel:
    """Train one binary SVM per category (one-vs-rest) with Pegasos updates:
    step size 1/(lambda * t), hinge loss, L2 regularization. The bias term is
    unregularized. Deterministic given inputs and seed."""
    if len(vectors) != len(labels):
        raise TrainingError("vectors and labels must have the same length")
    if not vectors:
        raise TrainingError("empty training set")
    categories = list(categories)
    label_set = set(labels)
    for cat in categories:
        if cat not in label_set:
            raise TrainingError(f"category {cat!r} has no training examples")
    unknown = label_set - set(categories)
    if unknown:
        raise TrainingError(f"labels outside the declared categories: {sorted(unknown)}")
    _check_vectors(vectors, n_features)

    # The bias is an always-on extra coordinate so the plain Pegasos update
    # covers it; it is split back out of the weight matrix at the end.
    active = [
        np.fromiter(sorted(vec) + [n_features], dtype=np.intp, count=len(vec) + 1)
        for vec in vectors
    ]
    n = len(vectors)
    weights = np.zeros((len(categories), n_features + 1), dtype=np.float64)
    history: Dict[str, List[float]] = {}
    rng = stable_rng(seed, "train-shuffle")

    for k, cat in enumerate(categories):
        y = np.array([1.0 if lab == cat else -1.0 for lab in labels])
        w = weights[k]
        t = 0
        epoch_objectives = []
        order = list(range(n))
        for _ in range(epochs):
            rng.shuffle(order)
            for i in order:
                t += 1
                eta = 1.0 / (lambda_ * t)
                idx = active[i]
                margin = y[i] * w[idx].sum()
                w *= 1.0 - eta * lambda_
                if margin < 1.0:
                    w[idx] += eta * y[i]
            epoch_objectives.append(_objective(w, active, y, lambda_))
        history[cat] = epoch_objectives

    return LinearModel(
        categories=categories,
        weights=weights[:, :n_features].copy(),
        bias=weights[:, n_features].copy(),
        lambda_=lambda_,
        epochs=epochs,
        seed=seed,
        feature_space_ref=feature_space_ref,
        objective_history=history,
    )


def _objective(
    w: np.ndarray, active: List[np.ndarray], y: np.ndarray, lambda_: float
) -> float:
    hinge = 0.0
    for i, idx in enumerate(active):
        hinge += max(0.0, 1.0 - y[i] * w[idx].sum())
    return 0.5 * lambda_ * float(w @ w) + hinge / len(active)


def decision_values(model: LinearModel, vector: BinaryFeatureVector) -> np.ndarray:
    _check_vectors([vector], model.n_features)
    idx = np.fromiter(sorted(vector), dtype=np.intp, count=len(vector))
    return model.weights[:, idx].sum(axis=1) + model.bias


def predict(model: LinearModel, vector: BinaryFeatureVector) -> str:
    """Highest-scoring category; ties resolve to the earliest-declared one."""
    scores = decision_values(model, vector)
    return model.categories[int(np.argmax(scores))]


def report_from_pairs(
    y_true: Sequence[str], y_pred: Sequence[str], categories: Sequence[str]
) -> EvalReport:
    """Accuracy, per-category precision/recall/F1 (0 where undefined),
    macro-F1 and the confusion matrix over the given categories."""
    if not y_true:
        raise DataError("empty test set")
    if len(y_true) != len(y_pred):
        raise DataError("prediction and label lists must have the same length")
    categories = list(categories)
    cat_index = {c: i for i, c in enumerate(categories)}
    for lab in y_true:
        if lab not in cat_index:
            raise DataError(f"test label {lab!r} not among the categories")
    k = len(categories)
    confusion = [[0] * k for _ in range(k)]
    for lab, pred in zip(y_true, y_pred):
        confusion[cat_index[lab]][cat_index[pred]] += 1

    per_category: Dict[str, Dict[str, float]] = {}
    f1_sum = 0.0
    correct = 0
    for i, cat in enumerate(categories):
        tp = confusion[i][i]
        fn = sum(confusion[i]) - tp
        fp = sum(confusion[r][i] for r in range(k)) - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_category[cat] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": tp + fn,
        }
        f1_sum += f1
        correct += tp
    return EvalReport(
        accuracy=correct / len(y_true),
        macro_f1=f1_sum / k,
        per_category=per_category,
        confusion=confusion,
        categories=categories,
        n_test=len(y_true),
    )


def evaluate(
    model: LinearModel,
    vectors: Sequence[BinaryFeatureVector],
    labels: Sequence[str],
) -> EvalReport:
    """Predict every vector and score against the labels, reporting over the
    model's declared categories."""
    if len(vectors) != len(labels):
        raise DataError("vectors and labels must have the same length")
    predictions = [predict(model, vec) for vec in vectors]
    return report_from_pairs(labels, predictions, model.categories)
