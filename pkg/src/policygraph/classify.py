"""Nearest-centroid classification heads and recall-first evaluation.

One model per task (incentive presence, instrument, topic) over provider
embeddings: a class centroid is the unit-normalized mean of its confirmed
positive examples, prediction is argmax (or thresholded multi-label)
cosine. Deterministic and auditable; an external fine-tuned model can
replace a head behind the same interface. Thresholds are closed (>=).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import EmbeddingVector, cosine
from .errors import ConfigError, InputError, StalenessError, TrainingError
from .store import INSTRUMENT_CLASSES


@dataclass
class Prediction:
    value: str
    score: float
    margin: float
    tie: bool = False


@dataclass
class CentroidModel:
    kind: str
    centroids: dict[str, EmbeddingVector]
    theta: float
    epoch_id: str
    training_digest: str

    @property
    def classes(self) -> list[str]:
        return sorted(self.centroids)

    def check_epoch(self, embedder):
        if embedder.epoch_id != self.epoch_id:
            raise StalenessError(
                f"model epoch {self.epoch_id} != current embedding epoch {embedder.epoch_id}")

    def scores(self, vec: EmbeddingVector) -> dict[str, float]:
        return {cls: cosine(vec, cen) for cls, cen in self.centroids.items()}

    def predict(self, vec: EmbeddingVector) -> Prediction:
        """Argmax over class centroids; exact ties go to the first class
        name in sorted order and are flagged."""
        scores = self.scores(vec)
        ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        best_cls, best = ordered[0]
        second = ordered[1][1] if len(ordered) > 1 else best
        return Prediction(
            value=best_cls,
            score=best,
            margin=best - second,
            tie=len(ordered) > 1 and best == second,
        )

    def predict_multilabel(self, vec: EmbeddingVector) -> list[tuple[str, float]]:
        """All classes scoring at least theta, sorted by score desc."""
        hits = [(c, s) for c, s in self.scores(vec).items() if s >= self.theta]
        hits.sort(key=lambda kv: (-kv[1], kv[0]))
        return hits


def train(kind: str, examples: list[tuple[str, str]], embedder, theta: float) -> CentroidModel:
    """Fit centroids from (class, analysis_text) positive examples.

    Each centroid is the unit-normalized mean of its class's embeddings;
    classes with no positive example are a training error.
    """
    by_class: dict[str, list[str]] = {}
    for cls, text in examples:
        by_class.setdefault(cls, []).append(text)
    if kind == "instrument":
        for cls in INSTRUMENT_CLASSES:
            if cls not in by_class:
                raise TrainingError(f"no positive examples for class {cls!r}")
    if not by_class:
        raise TrainingError("empty training set")

    digest = hashlib.sha256()
    centroids: dict[str, EmbeddingVector] = {}
    for cls in sorted(by_class):
        texts = by_class[cls]
        for t in sorted(texts):
            digest.update(f"{cls}\x00{t}\x00".encode())
        vecs = embedder.embed_batch(texts)
        mean = np.mean([v.values for v in vecs], axis=0)
        norm = np.linalg.norm(mean)
        if norm == 0:
            raise TrainingError(f"class {cls!r} has a zero centroid")
        centroids[cls] = EmbeddingVector(embedder.provider_id, embedder.dim, mean / norm)
    return CentroidModel(
        kind=kind,
        centroids=centroids,
        theta=theta,
        epoch_id=embedder.epoch_id,
        training_digest=digest.hexdigest()[:16],
    )


def predict_presence(vec: EmbeddingVector, *, model: CentroidModel | None = None,
                     query_vectors: list[EmbeddingVector] | None = None,
                     theta: float = 0.35) -> tuple[bool, float]:
    """Incentive presence: thresholded centroid score, or bootstrap mode
    scoring by max cosine over all instrument-class query embeddings."""
    if model is not None:
        score = model.scores(vec).get("true", 0.0)
    elif query_vectors:
        score = max(cosine(vec, q) for q in query_vectors)
    else:
        raise ConfigError("presence prediction needs a trained model or query sets")
    if vec.is_zero:
        return False, 0.0
    return score >= theta, score


# -- model persistence -----------------------------------------------------

MODEL_MAGIC = "centroid-model v1"


def save_model(model: CentroidModel, path: str | Path):
    """Text-numeric model file (endianness-independent)."""
    lines = [
        MODEL_MAGIC,
        f"kind={model.kind} epoch={model.epoch_id} theta={model.theta!r} "
        f"digest={model.training_digest}",
    ]
    for cls in model.classes:
        vec = model.centroids[cls]
        lines.append(f"class {cls} {vec.dim}")
        lines.append(" ".join(repr(x) for x in vec.values.tolist()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path, provider_id: str = "loaded") -> CentroidModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != MODEL_MAGIC:
        raise InputError("not a centroid model file")
    header = dict(part.split("=", 1) for part in lines[1].split())
    centroids: dict[str, EmbeddingVector] = {}
    i = 2
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        _, cls, dim = lines[i].split()
        values = np.array([float(x) for x in lines[i + 1].split()])
        if len(values) != int(dim):
            raise InputError(f"class {cls}: expected {dim} values, got {len(values)}")
        centroids[cls] = EmbeddingVector(provider_id, int(dim), values)
        i += 2
    return CentroidModel(
        kind=header["kind"],
        centroids=centroids,
        theta=float(header["theta"]),
        epoch_id=header["epoch"],
        training_digest=header["digest"],
    )


# -- evaluation ------------------------------------------------------------

@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    f_beta: float
    tp: int
    fp: int
    fn: int


@dataclass
class EvalReport:
    beta: float
    per_class: dict[str, ClassMetrics]
    confusion: dict[tuple[str, str], int]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    macro_f_beta: float
    micro_recall: float


def f_beta(precision: float, recall: float, beta: float) -> float:
    if precision == 0.0 and recall == 0.0:
        return 0.0
    b2 = beta * beta
    denom = b2 * precision + recall
    if denom == 0.0:
        return 0.0
    return (1 + b2) * precision * recall / denom


def evaluate(predictions: dict, gold: dict, beta: float = 2.0) -> EvalReport:
    """Per-class precision/recall/F1/F-beta over single-label items.

    ``predictions`` and ``gold`` map the same item keys to class names.
    Zero-denominator conventions: P=0 with no predictions, R=0 with no
    gold positives, F=0 when both are 0. Default beta=2 weights recall.
    """
    if set(predictions) != set(gold):
        raise InputError("prediction and gold sets must cover the same items")
    if not gold:
        raise InputError("empty evaluation set")

    confusion: dict[tuple[str, str], int] = {}
    for item, pred_cls in predictions.items():
        key = (gold[item], pred_cls)
        confusion[key] = confusion.get(key, 0) + 1

    classes = sorted(set(gold.values()) | set(predictions.values()))
    per_class: dict[str, ClassMetrics] = {}
    for cls in classes:
        tp = confusion.get((cls, cls), 0)
        fp = sum(n for (g, p), n in confusion.items() if p == cls and g != cls)
        fn = sum(n for (g, p), n in confusion.items() if g == cls and p != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        per_class[cls] = ClassMetrics(
            precision=precision,
            recall=recall,
            f1=f_beta(precision, recall, 1.0),
            f_beta=f_beta(precision, recall, beta),
            tp=tp, fp=fp, fn=fn,
        )

    n_classes = len(classes)
    total = sum(confusion.values())
    diag = sum(confusion.get((c, c), 0) for c in classes)
    return EvalReport(
        beta=beta,
        per_class=per_class,
        confusion=confusion,
        macro_precision=sum(m.precision for m in per_class.values()) / n_classes,
        macro_recall=sum(m.recall for m in per_class.values()) / n_classes,
        macro_f1=sum(m.f1 for m in per_class.values()) / n_classes,
        macro_f_beta=sum(m.f_beta for m in per_class.values()) / n_classes,
        micro_recall=diag / total,
    )
