"""Quality scoring: annotation parsing, linear regressors over embeddings,
classifier evaluation and score-distribution reporting.

The regressor is a plain linear head (w·x + b) trained with decoupled
weight decay Adam under a warmup + cosine-decay schedule, minimizing MSE
against integer annotation scores. Document embeddings arrive through the
EMBV1 binary file format so the scorer stays encoder-agnostic.
"""

from __future__ import annotations

import json
import math
import re
import struct
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

CATEGORIES = ("edu", "stem", "toxic")

SCORE_MARKERS = {
    "edu": "Pontuação educacional",
    "stem": "Pontuação STEM",
    "toxic": "Pontuação ofensiva",
}

EMB_MAGIC = b"EMBV1"

DEFAULT_BINARY_THRESHOLD = 3


class AnnotationParseError(ValueError):
    """The LLM response is missing its score marker or the score is not an integer."""


@dataclass
class AnnotationLabel:
    doc_id: str
    category: str
    score: int
    rationale: str = ""

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if self.score not in range(6):
            raise ValueError(f"score must be an integer in [0,5], got {self.score}")


def parse_annotation(response: str, category: str, doc_id: str = "") -> int:
    """Extract the integer after the category's score marker (last occurrence wins)."""
    marker = SCORE_MARKERS.get(category)
    if marker is None:
        raise ValueError(f"unknown category {category!r}")
    matches = re.findall(rf"{re.escape(marker)}\s*:\s*(-?\d+)", response)
    if not matches:
        where = f" for document {doc_id!r}" if doc_id else ""
        raise AnnotationParseError(
            f"no {marker!r} score found in {category} response{where}"
        )
    return max(0, min(5, int(matches[-1])))


# ---------------------------------------------------------------------------
# Embedding file format: magic "EMBV1", u32 dim, u64 count, then per record
# u16 id-length, UTF-8 id, dim little-endian f32 values.
# ---------------------------------------------------------------------------


class EmbeddingFormatError(ValueError):
    pass


@dataclass
class EmbeddingMatrix:
    dim: int
    ids: list[str]
    matrix: np.ndarray  # float32, shape (len(ids), dim)
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._index = {doc_id: i for i, doc_id in enumerate(self.ids)}
        if len(self._index) != len(self.ids):
            raise EmbeddingFormatError("duplicate document ids in embedding matrix")

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._index

    def vector(self, doc_id: str) -> np.ndarray:
        return self.matrix[self._index[doc_id]]


def load_embeddings(path) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:5] != EMB_MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {data[:5]!r}")
    if len(data) < 5 + 4 + 8:
        raise EmbeddingFormatError(f"{path}: truncated header")
    dim = struct.unpack_from("<I", data, 5)[0]
    count = struct.unpack_from("<Q", data, 9)[0]
    if dim == 0:
        raise EmbeddingFormatError(f"{path}: zero embedding dimension")

    offset = 17
    ids: list[str] = []
    rows = np.empty((count, dim), dtype=np.float32)
    for i in range(count):
        if offset + 2 > len(data):
            raise EmbeddingFormatError(f"{path}: truncated at record {i}")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        end = offset + id_len + 4 * dim
        if end > len(data):
            raise EmbeddingFormatError(f"{path}: truncated at record {i}")
        ids.append(data[offset : offset + id_len].decode("utf-8"))
        offset += id_len
        rows[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
    if offset != len(data):
        raise EmbeddingFormatError(f"{path}: {len(data) - offset} trailing bytes after {count} records")
    if not np.isfinite(rows).all():
        raise EmbeddingFormatError(f"{path}: non-finite embedding values")
    return EmbeddingMatrix(dim=dim, ids=ids, matrix=rows)


def write_embeddings(path, matrix: EmbeddingMatrix) -> None:
    if matrix.matrix.shape != (len(matrix.ids), matrix.dim):
        raise EmbeddingFormatError("matrix shape does not match ids/dim")
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(struct.pack("<IQ", matrix.dim, len(matrix.ids)))
        for doc_id, row in zip(matrix.ids, matrix.matrix):
            encoded = doc_id.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(np.asarray(row, dtype="<f4").tobytes())


# ---------------------------------------------------------------------------
# Linear regressor
# ---------------------------------------------------------------------------


@dataclass
class RegressorHyperparams:
    epochs: int = 20
    warmup_fraction: float = 0.05
    peak_learning_rate: float = 3e-4
    batch_size: int = 64
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError("warmup_fraction must be in [0,1)")
        if self.peak_learning_rate <= 0:
            raise ValueError("peak_learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class RegressorModel:
    weights: np.ndarray
    bias: float
    category: str

    @property
    def dim(self) -> int:
        return len(self.weights)

    def to_json(self) -> str:
        return json.dumps(
            {
                "category": self.category,
                "dim": self.dim,
                "bias": self.bias,
                "weights": [float(w) for w in self.weights],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "RegressorModel":
        obj = json.loads(text)
        weights = np.asarray(obj["weights"], dtype=np.float64)
        if len(weights) != obj["dim"]:
            raise ValueError("model dim does not match weight vector length")
        return cls(weights=weights, bias=float(obj["bias"]), category=obj["category"])


def save_model(path, model: RegressorModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model.to_json())


def load_model(path) -> RegressorModel:
    with open(path, encoding="utf-8") as fh:
        return RegressorModel.from_json(fh.read())


def mse_loss_and_grad(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, float]:
    """Mean squared error of (w·x + b) vs y with its analytic gradient."""
    residual = X @ w + b - y
    n = len(y)
    loss = float(residual @ residual) / n
    grad_w = (2.0 / n) * (X.T @ residual)
    grad_b = (2.0 / n) * float(residual.sum())
    return loss, grad_w, grad_b


def learning_rate_schedule(step: int, total_steps: int, hp: RegressorHyperparams) -> float:
    """Linear warmup to the peak rate, then cosine decay to zero."""
    warmup_steps = int(round(hp.warmup_fraction * total_steps))
    if warmup_steps > 0 and step < warmup_steps:
        return hp.peak_learning_rate * (step + 1) / warmup_steps
    span = max(1, total_steps - warmup_steps)
    progress = (step - warmup_steps) / span
    return hp.peak_learning_rate * 0.5 * (1.0 + math.cos(math.pi * min(progress, 1.0)))


def train_regressor(
    embeddings: EmbeddingMatrix,
    labels: Sequence[AnnotationLabel],
    hp: Optional[RegressorHyperparams] = None,
    seed: int = 0,
) -> RegressorModel:
    """Fit the linear head by MSE with Adam + decoupled weight decay.

    Deterministic given the seed; weights start at zero (the objective is
    convex, so initialization only affects the path).
    """
    if hp is None:
        hp = RegressorHyperparams()
    if not labels:
        raise ValueError("no labels provided")
    categories = {lbl.category for lbl in labels}
    if len(categories) != 1:
        raise ValueError(f"labels span multiple categories: {sorted(categories)}")
    category = labels[0].category

    missing = sorted(lbl.doc_id for lbl in labels if lbl.doc_id not in embeddings)
    if missing:
        raise ValueError(f"missing embeddings for {len(missing)} documents: {missing[:10]}")
    if len({lbl.score for lbl in labels}) < 2:
        raise ValueError("labels are degenerate: at least 2 distinct score values required")

    X = np.stack([embeddings.vector(lbl.doc_id) for lbl in labels]).astype(np.float64)
    y = np.array([lbl.score for lbl in labels], dtype=np.float64)

    n, dim = X.shape
    w = np.zeros(dim)
    b = 0.0
    m_w = np.zeros(dim)
    v_w = np.zeros(dim)
    m_b = v_b = 0.0

    rng = np.random.default_rng(seed)
    steps_per_epoch = math.ceil(n / hp.batch_size)
    total_steps = hp.epochs * steps_per_epoch
    step = 0
    for _ in range(hp.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hp.batch_size):
            batch = order[start : start + hp.batch_size]
            _, grad_w, grad_b = mse_loss_and_grad(w, b, X[batch], y[batch])
            lr = learning_rate_schedule(step, total_steps, hp)
            step += 1

            m_w = hp.beta1 * m_w + (1 - hp.beta1) * grad_w
            v_w = hp.beta2 * v_w + (1 - hp.beta2) * grad_w**2
            m_b = hp.beta1 * m_b + (1 - hp.beta1) * grad_b
            v_b = hp.beta2 * v_b + (1 - hp.beta2) * grad_b**2
            bc1 = 1 - hp.beta1**step
            bc2 = 1 - hp.beta2**step

            w -= lr * ((m_w / bc1) / (np.sqrt(v_w / bc2) + hp.eps) + hp.weight_decay * w)
            b -= lr * ((m_b / bc1) / (math.sqrt(v_b / bc2) + hp.eps))

    return RegressorModel(weights=w, bias=b, category=category)


def score_document(model: RegressorModel, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise ValueError(f"embedding has dim {x.shape}, model expects ({model.dim},)")
    return float(np.clip(model.weights @ x + model.bias, 0.0, 5.0))


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def binarize(score: float, threshold: int = DEFAULT_BINARY_THRESHOLD) -> bool:
    """True iff the score, rounded half-up to the nearest integer, reaches the threshold."""
    return round_half_up(score) >= threshold


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass
class ClassifierMetrics:
    per_class: dict[int, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    binary_precision: float
    binary_recall: float
    binary_f1: float
    threshold: int


def _prf(tp: int, fp: int, fn: int) -> ClassMetrics:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ClassMetrics(precision, recall, f1)


def evaluate_classifier(
    pred: Sequence[float],
    gold: Sequence[int],
    threshold: int = DEFAULT_BINARY_THRESHOLD,
) -> ClassifierMetrics:
    """Multiclass metrics after rounding predictions, binary metrics after binarization."""
    if len(pred) != len(gold):
        raise ValueError(f"pred has {len(pred)} entries, gold has {len(gold)}")
    if not gold:
        raise ValueError("empty evaluation set")

    rounded = [max(0, min(5, round_half_up(p))) for p in pred]
    classes = sorted(set(gold) | set(rounded))

    per_class: dict[int, ClassMetrics] = {}
    for cls in classes:
        tp = sum(1 for p, g in zip(rounded, gold) if p == cls and g == cls)
        fp = sum(1 for p, g in zip(rounded, gold) if p == cls and g != cls)
        fn = sum(1 for p, g in zip(rounded, gold) if p != cls and g == cls)
        per_class[cls] = _prf(tp, fp, fn)

    pred_pos = [binarize(p, threshold) for p in pred]
    gold_pos = [g >= threshold for g in gold]
    tp = sum(1 for p, g in zip(pred_pos, gold_pos) if p and g)
    fp = sum(1 for p, g in zip(pred_pos, gold_pos) if p and not g)
    fn = sum(1 for p, g in zip(pred_pos, gold_pos) if not p and g)
    binary = _prf(tp, fp, fn)

    k = len(classes)
    return ClassifierMetrics(
        per_class=per_class,
        macro_precision=sum(m.precision for m in per_class.values()) / k,
        macro_recall=sum(m.recall for m in per_class.values()) / k,
        macro_f1=sum(m.f1 for m in per_class.values()) / k,
        binary_precision=binary.precision,
        binary_recall=binary.recall,
        binary_f1=binary.f1,
        threshold=threshold,
    )


def score_distribution(labels: Iterable[AnnotationLabel | int]) -> dict[int, float]:
    """Percentage of labels at each score 0..5."""
    scores = [lbl.score if isinstance(lbl, AnnotationLabel) else int(lbl) for lbl in labels]
    if not scores:
        raise ValueError("empty label set")
    n = len(scores)
    return {s: 100.0 * scores.count(s) / n for s in range(6) if scores.count(s)}


def format_score_distribution(distributions: Mapping[str, Mapping[int, float]]) -> str:
    """Aligned table of score percentages per category, one row per category."""
    header = "Scores      " + "".join(f"{s:>6}" for s in range(6))
    lines = [header]
    for name, dist in distributions.items():
        cells = "".join(f"{dist.get(s, 0.0):>5.0f}%" for s in range(6))
        lines.append(f"{name:<12}{cells}")
    return "\n".join(lines)
