"""Bias-free feed-forward classifiers, full-batch training, data and metrics.

Weights are stored as one flat float64 vector so they can be shared and
aggregated as a tensor. Layer ``k`` is a ``(fan_in, fan_out)`` matrix taken
from that vector in row-major order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DatasetParseError, DimensionMismatchError, EmptyDatasetError, SchemaError

N_FEATURES = 121
N_CLASSES = 2
DEFAULT_LR = 0.05


@dataclass(frozen=True)
class ModelSpec:
    input_dim: int = N_FEATURES
    hidden_dims: tuple[int, ...] = ()
    output_dim: int = N_CLASSES

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_dims, self.output_dim]
        return list(zip(dims[:-1], dims[1:]))

    @property
    def size(self) -> int:
        return sum(a * b for a, b in self.layer_shapes)


SIMPLE_NN = ModelSpec()
COMPLEX_NN = ModelSpec(hidden_dims=(60,))
MODEL_SPECS = {"simple": SIMPLE_NN, "complex": COMPLEX_NN}


@dataclass
class ModelTensor:
    spec: ModelSpec
    weights: np.ndarray
    epoch: int = 0
    iteration: int = 0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.spec.size,):
            raise DimensionMismatchError(
                f"expected {self.spec.size} weights, got shape {self.weights.shape}"
            )

    def layers(self) -> list[np.ndarray]:
        return unpack(self.spec, self.weights)

    def copy(self) -> "ModelTensor":
        return ModelTensor(self.spec, self.weights.copy(), self.epoch, self.iteration)


def unpack(spec: ModelSpec, flat: np.ndarray) -> list[np.ndarray]:
    out, pos = [], 0
    for a, b in spec.layer_shapes:
        out.append(flat[pos : pos + a * b].reshape(a, b))
        pos += a * b
    return out


def init_model(spec: ModelSpec, seed: int) -> ModelTensor:
    """Uniform in +-1/sqrt(fan_in), layer by layer."""
    rng = np.random.default_rng(seed)
    parts = [rng.uniform(-1.0, 1.0, size=a * b) / math.sqrt(a) for a, b in spec.layer_shapes]
    return ModelTensor(spec, np.concatenate(parts))


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[1] != N_FEATURES:
            raise SchemaError(f"features must have shape (rows, {N_FEATURES}), got {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise SchemaError("row count and label count differ")
        if self.labels.size and not np.isin(self.labels, (0, 1)).all():
            raise SchemaError("labels must be 0 or 1")

    def __len__(self):
        return self.labels.shape[0]

    @classmethod
    def concat(cls, parts) -> "Dataset":
        parts = list(parts)
        return cls(np.vstack([d.features for d in parts]), np.concatenate([d.labels for d in parts]))


# ---------------------------------------------------------------------------
# forward / backward
# ---------------------------------------------------------------------------


def _forward(layers, x):
    acts = [x]
    h = x
    for k, w in enumerate(layers):
        h = h @ w
        if k < len(layers) - 1:
            h = np.maximum(h, 0.0)
        acts.append(h)
    return acts


def forward(model: ModelTensor, x) -> np.ndarray:
    """Class scores for one row (shape ``(2,)``) or a batch (shape ``(rows, 2)``)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.spec.input_dim:
        raise DimensionMismatchError(f"expected {model.spec.input_dim} features, got {x.shape[-1]}")
    return _forward(model.layers(), x)[-1]


def predict(model: ModelTensor, features) -> np.ndarray:
    # argmax picks the first maximum, so ties go to class 0
    return np.argmax(forward(model, features), axis=-1)


def loss_and_grad(model: ModelTensor, data: Dataset) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient w.r.t. the flat weights."""
    if len(data) == 0:
        raise EmptyDatasetError("cannot compute a loss on an empty dataset")
    layers = model.layers()
    acts = _forward(layers, data.features)
    scores = acts[-1]
    shifted = scores - scores.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(len(data))
    loss = float(np.mean(logz - shifted[rows, data.labels]))

    delta = np.exp(shifted - logz[:, None])
    delta[rows, data.labels] -= 1.0
    delta /= len(data)
    grads = [None] * len(layers)
    for k in range(len(layers) - 1, -1, -1):
        grads[k] = acts[k].T @ delta
        if k:
            delta = (delta @ layers[k].T) * (acts[k] > 0)
    return loss, np.concatenate([g.ravel() for g in grads])


def local_train(model: ModelTensor, data: Dataset, t: int, lr: float = DEFAULT_LR) -> ModelTensor:
    if t < 0:
        raise ValueError("iteration count must be non-negative")
    w = model.weights.copy()
    cur = ModelTensor(model.spec, w, model.epoch, model.iteration)
    for k in range(t):
        _, g = loss_and_grad(cur, data)
        w -= lr * g
        cur.iteration = model.iteration + k + 1
    return cur


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    recall: float
    precision: float
    balanced: float
    tp: int
    fp: int
    tn: int
    fn: int
    undefined: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "recall": self.recall,
            "precision": self.precision,
            "balanced": self.balanced,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "undefined": list(self.undefined),
        }


def metrics_from_counts(tp: int, fp: int, tn: int, fn: int) -> Metrics:
    """Metrics with a zero denominator come out NaN and are listed in ``undefined``."""
    undefined = []

    def ratio(num, den, name):
        if den == 0:
            undefined.append(name)
            return math.nan
        return num / den

    recall = ratio(tp, tp + fn, "recall")
    precision = ratio(tp, tp + fp, "precision")
    tnr = tn / (tn + fp) if tn + fp else math.nan
    if math.isnan(recall) or math.isnan(tnr):
        undefined.append("balanced")
        balanced = math.nan
    else:
        balanced = (recall + tnr) / 2
    return Metrics(recall, precision, balanced, tp, fp, tn, fn, tuple(undefined))


def compute_metrics(model: ModelTensor, data: Dataset) -> Metrics:
    if len(data) == 0:
        raise EmptyDatasetError("cannot evaluate on an empty dataset")
    pred = predict(model, data.features)
    y = data.labels
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    return metrics_from_counts(tp, fp, tn, fn)


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------


def _unit(v):
    return v / np.linalg.norm(v)


def gen_synthetic(
    parties: int,
    rows_per_party: int = 200,
    shift: float = 1.0,
    seed: int = 0,
    separation: float = 2.5,
    heldout_rows: int | None = None,
) -> tuple[list[Dataset], Dataset]:
    """Gaussian class-conditional data with per-party heterogeneity.

    Class ``y`` is centred at ``+-separation * u_k`` with unit noise, where
    ``u_k`` is the shared fault direction tilted by ``shift`` towards a
    random party-specific direction. The held-out set uses the untilted
    direction. Labels alternate, so every set is balanced.
    """
    if parties < 1 or rows_per_party < 2:
        raise ValueError("need at least one party and two rows per party")
    rng = np.random.default_rng(seed)
    base = _unit(rng.standard_normal(N_FEATURES))

    def draw(direction, rows, gen):
        labels = np.arange(rows) % 2
        signs = np.where(labels == 1, 1.0, -1.0)
        feats = gen.standard_normal((rows, N_FEATURES)) + separation * signs[:, None] * direction
        return Dataset(feats, labels)

    sets = []
    for k in range(parties):
        gen = np.random.default_rng([seed, k + 1])
        tilt = _unit(gen.standard_normal(N_FEATURES))
        sets.append(draw(_unit(base + shift * tilt), rows_per_party, gen))
    held = draw(base, heldout_rows or rows_per_party, np.random.default_rng([seed, 0]))
    return sets, held


def write_csv(data: Dataset, path, header: bool = True) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"f{k}" for k in range(N_FEATURES)] + ["label"])
        for row, y in zip(data.features, data.labels):
            w.writerow([repr(float(v)) for v in row] + [int(y)])
    return path


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path) -> Dataset:
    """121 feature columns then a 0/1 label; a header row is detected and skipped."""
    feats, labels = [], []
    with Path(path).open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != N_FEATURES + 1:
                raise SchemaError(f"row {lineno}: expected {N_FEATURES + 1} columns, got {len(row)}")
            if lineno == 1 and not any(_is_number(c) for c in row):
                continue
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DatasetParseError(f"non-numeric cell {cell!r}", lineno, col) from None
            label = vals.pop()
            if label not in (0.0, 1.0):
                raise DatasetParseError(f"label must be 0 or 1, got {label}", lineno, N_FEATURES + 1)
            feats.append(vals)
            labels.append(int(label))
    if not feats:
        return Dataset(np.empty((0, N_FEATURES)), np.empty(0, dtype=np.int64))
    return Dataset(np.array(feats), np.array(labels))
